#pragma once

// The five migration strategies as a per-UE controller reacting to coverage
// entries, prepare-band entries and handoff signals.

#include "msmf/migration.hpp"
#include "msmf/prediction.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace msmf {

enum class RecordKind : std::uint8_t { Precopy, Cold, Discarded };

std::string_view to_string(RecordKind k) noexcept;

struct MigrationRecord {
    std::int64_t run_id = 0;
    std::int64_t ue_id = 0;
    StrategyKind strategy = StrategyKind::Nearest;
    double speed_mps = 0.0;
    ServerId source = kNoServer;
    ServerId target = kNoServer;
    double t_start = 0.0;
    double t_handoff = 0.0;
    std::int64_t traffic_bytes = 0;
    double downtime_s = 0.0;
    RecordKind kind = RecordKind::Precopy;
    int relay_hops = 0;
    bool deadline_violated = false;

    // Not exported to CSV; kept for checks.
    Tier tier = Tier::Local;
    LatencyClass::Name latency_class = LatencyClass::Name::Low;
    bool converged = false;
    std::int64_t handoff_bytes = 0;
    double start_time_s = 0.0;
};

/// All sessions of one run plus per-server storage bookkeeping.
class SessionPool {
public:
    SessionPool(const Topology& topology, double bandwidth_Bps, std::int64_t threshold_bytes);

    /// Starts a session if the target has room; nullopt when storage rejects it.
    std::optional<std::size_t> begin(ServerId source, ServerId target, const ContainerSpec& spec, double t,
                                     bool image_only);
    /// Cold transfer: always admitted, may overcommit.
    std::size_t begin_cold(ServerId source, ServerId target, const ContainerSpec& spec, double t);

    MigrationSession& at(std::size_t id) { return sessions_[id]; }
    const MigrationSession& at(std::size_t id) const { return sessions_[id]; }
    std::size_t size() const noexcept { return sessions_.size(); }

    void occupy(ServerId server, std::int64_t bytes);
    void release(ServerId server, std::int64_t bytes);
    std::int64_t used(ServerId server) const;

    /// Sessions whose next event time may have changed since the last drain.
    std::vector<std::size_t> drain_touched();
    void touch(std::size_t id) { touched_.push_back(id); }

    std::int64_t rejections() const noexcept { return rejections_; }
    std::int64_t total_bytes() const noexcept;

private:
    const Topology* topology_;
    double bandwidth_;
    std::int64_t threshold_;
    std::vector<MigrationSession> sessions_;
    std::vector<std::int64_t> used_;
    std::vector<std::size_t> touched_;
    std::int64_t rejections_ = 0;
};

struct StrategyContext {
    StrategyKind kind = StrategyKind::PM;
    const RoadGraph* graph = nullptr;
    const MrMap* mr = nullptr;
    PredictionConfig prediction;
    double prep_band_m = 200.0;
    ReportThresholds report;
    std::int64_t run_id = 0;
};

/// Controller for one UE. The simulator keeps `ue()` current (position,
/// speed) before invoking a handler.
class UeController {
public:
    UeController(const StrategyContext& ctx, SessionPool& pool, std::vector<MigrationRecord>& sink, UeState ue,
                 ContainerSpec spec, Tier tier, bool deadline_violation);

    UeState& ue() noexcept { return ue_; }
    const UeState& ue() const noexcept { return ue_; }
    Tier tier() const noexcept { return tier_; }
    const ContainerSpec& spec() const noexcept { return spec_; }
    std::optional<std::size_t> session() const noexcept { return primary_; }
    int relay_hops() const noexcept { return relay_hops_; }

    /// UE just entered a coverage interval (or spawned into one).
    void on_coverage_entry(double t);
    /// Nearest only: the UE is within the prepare band of a boundary into `next`.
    void on_prepare_band(double t, ServerId next);
    /// Arrived at a road node; re-plans if the status report policy fires.
    void on_node_arrival(double t);
    /// UE crossed into coverage of `entered`.
    void on_handoff_signal(double t, ServerId entered);
    /// Trip over: abandon anything still in flight.
    void on_trace_end(double t);

private:
    void replan(double t);
    void finish_discard(std::size_t id, double t);
    void discard_prestage(double t, ServerId keep = kNoServer);
    void cold_transfer(double t, ServerId target);
    void complete(std::size_t id, double t);
    MigrationRecord base_record() const;

    const StrategyContext* ctx_;
    SessionPool* pool_;
    std::vector<MigrationRecord>* sink_;
    UeState ue_;
    ContainerSpec spec_;
    Tier tier_;
    bool violation_;

    std::optional<std::size_t> primary_;
    std::vector<std::size_t> prestage_;
    std::vector<ServerId> skipped_;
    int relay_hops_ = 0;
};

}  // namespace msmf
