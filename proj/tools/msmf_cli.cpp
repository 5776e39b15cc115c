// msmf: command-line front end for the migration simulator.

#include "msmf/errors.hpp"
#include "msmf/mobility.hpp"
#include "msmf/roadnet.hpp"
#include "msmf/scenario_io.hpp"
#include "msmf/simcore.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kInvariant = 4 };

struct RunOptions {
    std::string config;
    std::string out = "out";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string speeds;
    std::string strategy;
    bool parallel = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw msmf::IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw msmf::IoError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

msmf::ScenarioConfig resolve(const RunOptions& o, bool sweep_mode) {
    std::vector<std::string> ovs = o.overrides;
    if (o.seed) ovs.push_back(fmt::format("seed={}", *o.seed));
    if (!o.speeds.empty()) ovs.push_back(fmt::format("speeds_mps=[{}]", o.speeds));
    if (!o.strategy.empty()) {
        if (sweep_mode) {
            std::string arr;
            for (const auto& s : split_list(o.strategy)) arr += (arr.empty() ? "\"" : ",\"") + s + "\"";
            ovs.push_back("strategies=[" + arr + "]");
        } else {
            ovs.push_back("strategy=" + o.strategy);
        }
    }
    return msmf::parse_config(msmf::apply_overrides(read_file(o.config), ovs));
}

void write_bundle(const fs::path& dir, const msmf::ScenarioConfig& cfg, const std::vector<msmf::RunReport>& reports) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw msmf::IoError("cannot create " + dir.string() + ": " + ec.message());
    {
        auto out = open_out(dir / "migrations.csv");
        msmf::write_migrations_csv(out, reports);
    }
    {
        auto out = open_out(dir / "summary.csv");
        msmf::write_summary_csv(out, msmf::aggregate(reports));
    }
    auto out = open_out(dir / "config.resolved.json");
    out << msmf::config_to_json(cfg);
}

int cmd_run(const RunOptions& o, bool sweep_mode) {
    const auto cfg = resolve(o, sweep_mode);
    std::vector<msmf::RunReport> reports;
    if (sweep_mode)
        reports = msmf::sweep(cfg, cfg.speeds_mps, cfg.strategies, o.parallel);
    else
        reports.push_back(msmf::run(cfg));
    write_bundle(o.out, cfg, reports);
    std::size_t records = 0;
    for (const auto& r : reports) records += r.records.size();
    std::cerr << fmt::format("{} run(s), {} migration records -> {}\n", reports.size(), records, o.out);
    return kOk;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const msmf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const msmf::InvalidDims& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const msmf::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const msmf::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kIo;
    } catch (const msmf::InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << "\n";
        return kInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multitier service migration simulator"};
    app.require_subcommand(1);

    RunOptions run_opts;
    auto add_run_flags = [](CLI::App* sub, RunOptions& o) {
        sub->add_option("--config", o.config, "Scenario JSON file")->required();
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--override", o.overrides, "KEY=VALUE applied to the config (repeatable)");
        sub->add_option("--seed", o.seed, "Replace the config seed");
        sub->add_option("--speeds", o.speeds, "Comma-separated speeds in m/s");
        sub->add_option("--strategy", o.strategy, "nearest | pm | pm-op | pm-tier | pm-op-tier");
        sub->add_flag("--parallel", o.parallel, "Run sweep cells on worker threads");
    };
    auto* run = app.add_subcommand("run", "Run one strategy over the configured UEs");
    add_run_flags(run, run_opts);
    RunOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Run every (speed, strategy) pair");
    add_run_flags(sweep, sweep_opts);

    int rows = 1, cols = 1;
    double separation = 500.0;
    std::string map_out;
    auto* gen_map = app.add_subcommand("gen-map", "Write a grid road network");
    gen_map->add_option("--rows", rows)->capture_default_str();
    gen_map->add_option("--cols", cols)->capture_default_str();
    gen_map->add_option("--separation", separation, "Block edge in meters")->capture_default_str();
    gen_map->add_option("--out", map_out, "Road-graph JSON file")->required();

    std::string graph_path, trips_out;
    int n = 1;
    double speed = 10.0, duration = 600.0, dt = 1.0;
    std::uint64_t trip_seed = 1;
    auto* gen_trips = app.add_subcommand("gen-trips", "Write random constant-speed trips as CSV");
    gen_trips->add_option("--graph", graph_path, "Road-graph JSON file")->required();
    gen_trips->add_option("--n", n, "Number of UEs")->capture_default_str();
    gen_trips->add_option("--speed", speed, "m/s")->capture_default_str();
    gen_trips->add_option("--duration", duration, "seconds")->capture_default_str();
    gen_trips->add_option("--dt", dt, "Sample period in seconds")->capture_default_str();
    gen_trips->add_option("--seed", trip_seed)->capture_default_str();
    gen_trips->add_option("--out", trips_out, "Trace CSV file")->required();

    std::string mr_config, mr_out;
    std::vector<std::string> mr_overrides;
    auto* dump = app.add_subcommand("dump-mrmap", "Print the road-to-server coverage map");
    dump->add_option("--config", mr_config)->required();
    dump->add_option("--override", mr_overrides);
    dump->add_option("--out", mr_out, "File (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    if (run->parsed()) return guarded([&] { return cmd_run(run_opts, false); });
    if (sweep->parsed()) return guarded([&] { return cmd_run(sweep_opts, true); });
    if (gen_map->parsed())
        return guarded([&] {
            msmf::save_road_graph(msmf::make_grid_graph(rows, cols, separation), map_out);
            return kOk;
        });
    if (gen_trips->parsed())
        return guarded([&] {
            if (n < 1) throw msmf::ConfigError("n", "must be >= 1");
            const auto graph = msmf::load_road_graph(graph_path);
            std::vector<msmf::Trace> traces;
            for (int i = 0; i < n; ++i)
                traces.push_back(msmf::generate_trip(graph, msmf::derive_seed(trip_seed, static_cast<std::uint64_t>(i)),
                                                     speed, duration, dt, i));
            auto out = open_out(trips_out);
            msmf::write_traces_csv(out, traces);
            return kOk;
        });
    if (dump->parsed())
        return guarded([&] {
            const auto cfg = msmf::parse_config(msmf::apply_overrides(read_file(mr_config), mr_overrides));
            const auto world = msmf::build_world(cfg);
            const std::string table = msmf::format_mr_map(world.mr);
            if (mr_out.empty()) {
                std::cout << table;
            } else {
                auto out = open_out(mr_out);
                out << table;
            }
            return kOk;
        });
    return kOther;
}
