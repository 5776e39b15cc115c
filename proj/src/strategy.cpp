#include "msmf/strategy.hpp"

#include "msmf/errors.hpp"

#include <algorithm>

namespace msmf {

std::string_view to_string(RecordKind k) noexcept {
    switch (k) {
        case RecordKind::Precopy: return "precopy";
        case RecordKind::Cold: return "cold";
        case RecordKind::Discarded: return "discarded";
    }
    return "?";
}

SessionPool::SessionPool(const Topology& topology, double bandwidth_Bps, std::int64_t threshold_bytes)
    : topology_(&topology),
      bandwidth_(bandwidth_Bps),
      threshold_(threshold_bytes),
      used_(topology.servers().size(), 0) {}

std::optional<std::size_t> SessionPool::begin(ServerId source, ServerId target, const ContainerSpec& spec, double t,
                                              bool image_only) {
    const std::int64_t need = spec.image_bytes + spec.ram_bytes;
    if (used(target) + need > topology_->server(target).storage_capacity_bytes) {
        ++rejections_;
        return std::nullopt;
    }
    occupy(target, need);
    sessions_.emplace_back(source, target, spec, bandwidth_, threshold_, image_only);
    sessions_.back().begin(t);
    touched_.push_back(sessions_.size() - 1);
    return sessions_.size() - 1;
}

std::size_t SessionPool::begin_cold(ServerId source, ServerId target, const ContainerSpec& spec, double t) {
    occupy(target, spec.image_bytes + spec.ram_bytes);
    sessions_.emplace_back(source, target, spec, bandwidth_, threshold_, false);
    sessions_.back().begin(t);
    return sessions_.size() - 1;
}

void SessionPool::occupy(ServerId server, std::int64_t bytes) {
    used_.at(static_cast<std::size_t>(server)) += bytes;
}

void SessionPool::release(ServerId server, std::int64_t bytes) {
    auto& u = used_.at(static_cast<std::size_t>(server));
    if (u < bytes) throw InvariantViolation("storage release exceeds reservation");
    u -= bytes;
}

std::int64_t SessionPool::used(ServerId server) const { return used_.at(static_cast<std::size_t>(server)); }

std::vector<std::size_t> SessionPool::drain_touched() {
    std::vector<std::size_t> out;
    out.swap(touched_);
    return out;
}

std::int64_t SessionPool::total_bytes() const noexcept {
    std::int64_t sum = 0;
    for (const auto& s : sessions_) sum += traffic(s);
    return sum;
}

UeController::UeController(const StrategyContext& ctx, SessionPool& pool, std::vector<MigrationRecord>& sink,
                           UeState ue, ContainerSpec spec, Tier tier, bool deadline_violation)
    : ctx_(&ctx),
      pool_(&pool),
      sink_(&sink),
      ue_(std::move(ue)),
      spec_(spec),
      tier_(tier),
      violation_(deadline_violation) {
    pool_->occupy(ue_.serving_server, spec_.image_bytes + spec_.ram_bytes);
}

MigrationRecord UeController::base_record() const {
    MigrationRecord r;
    r.run_id = ctx_->run_id;
    r.ue_id = ue_.ue_id;
    r.strategy = ctx_->kind;
    r.speed_mps = ue_.speed;
    r.deadline_violated = violation_;
    r.tier = tier_;
    r.latency_class = ue_.latency_class.name;
    r.start_time_s = start_time(spec_);
    return r;
}

void UeController::complete(std::size_t id, double t) {
    auto& s = pool_->at(id);
    auto r = base_record();
    r.source = s.source();
    r.target = s.target();
    r.t_start = s.t_started();
    r.t_handoff = t;
    r.downtime_s = s.handoff(t);
    r.traffic_bytes = traffic(s);
    r.kind = RecordKind::Precopy;
    r.relay_hops = relay_hops_;
    r.converged = s.converged();
    r.handoff_bytes = s.bytes_handoff_sent();
    sink_->push_back(r);
    pool_->release(s.source(), spec_.image_bytes + spec_.ram_bytes);
    ue_.serving_server = s.target();
    relay_hops_ = 0;
    skipped_.clear();
}

void UeController::finish_discard(std::size_t id, double t) {
    auto& s = pool_->at(id);
    s.discard(t);
    auto r = base_record();
    r.source = s.source();
    r.target = s.target();
    r.t_start = s.t_started();
    r.t_handoff = t;
    r.traffic_bytes = traffic(s);
    r.kind = RecordKind::Discarded;
    sink_->push_back(r);
    pool_->release(s.target(), spec_.image_bytes + spec_.ram_bytes);
}

void UeController::discard_prestage(double t, ServerId keep) {
    std::vector<std::size_t> kept;
    for (std::size_t id : prestage_) {
        if (pool_->at(id).target() == keep)
            kept.push_back(id);
        else
            finish_discard(id, t);
    }
    prestage_.swap(kept);
}

void UeController::cold_transfer(double t, ServerId target) {
    const std::size_t id = pool_->begin_cold(ue_.serving_server, target, spec_, t);
    auto& s = pool_->at(id);
    auto r = base_record();
    r.source = s.source();
    r.target = target;
    r.t_start = t;
    r.t_handoff = t;
    r.downtime_s = s.handoff(t);
    r.traffic_bytes = traffic(s);
    r.kind = RecordKind::Cold;
    r.relay_hops = relay_hops_;
    r.handoff_bytes = s.bytes_handoff_sent();
    sink_->push_back(r);
    pool_->release(s.source(), spec_.image_bytes + spec_.ram_bytes);
    ue_.serving_server = target;
    relay_hops_ = 0;
    skipped_.clear();
}

void UeController::on_coverage_entry(double t) {
    should_report(ue_, *ctx_->graph, ctx_->report);
    if (uses_prediction(ctx_->kind)) replan(t);
}

void UeController::on_node_arrival(double t) {
    if (should_report(ue_, *ctx_->graph, ctx_->report) && uses_prediction(ctx_->kind)) replan(t);
}

void UeController::replan(double t) {
    auto res = decide(ctx_->kind, ue_, *ctx_->mr, *ctx_->graph, ctx_->prediction);
    skipped_ = std::move(res.skipped);

    if (primary_ && pool_->at(*primary_).target() != res.target) {
        finish_discard(*primary_, t);
        primary_.reset();
    }
    std::vector<std::size_t> kept;
    for (std::size_t id : prestage_) {
        const ServerId tgt = pool_->at(id).target();
        if (tgt != res.target && std::find(res.prestage.begin(), res.prestage.end(), tgt) != res.prestage.end())
            kept.push_back(id);
        else
            finish_discard(id, t);
    }
    prestage_.swap(kept);

    if (!primary_ && res.target != kNoServer)
        primary_ = pool_->begin(ue_.serving_server, res.target, spec_, t, false);
    for (ServerId alt : res.prestage) {
        const bool have = std::any_of(prestage_.begin(), prestage_.end(),
                                      [&](std::size_t id) { return pool_->at(id).target() == alt; });
        if (have) continue;
        if (auto id = pool_->begin(ue_.serving_server, alt, spec_, t, true)) prestage_.push_back(*id);
    }
}

void UeController::on_prepare_band(double t, ServerId next) {
    if (next == ue_.serving_server) return;
    if (primary_) {
        if (pool_->at(*primary_).target() == next) return;
        finish_discard(*primary_, t);
        primary_.reset();
    }
    primary_ = pool_->begin(ue_.serving_server, next, spec_, t, false);
}

void UeController::on_handoff_signal(double t, ServerId entered) {
    if (entered == ue_.serving_server) return;
    const bool primary_hit = primary_ && pool_->at(*primary_).target() == entered;
    if (uses_skip(ctx_->kind) && !primary_hit &&
        std::find(skipped_.begin(), skipped_.end(), entered) != skipped_.end()) {
        ++relay_hops_;
        return;
    }
    if (primary_hit) {
        const std::size_t id = *primary_;
        primary_.reset();
        discard_prestage(t);
        complete(id, t);
        return;
    }
    auto pre = std::find_if(prestage_.begin(), prestage_.end(),
                            [&](std::size_t id) { return pool_->at(id).target() == entered; });
    if (pre != prestage_.end()) {
        const std::size_t id = *pre;
        prestage_.erase(pre);
        if (primary_) finish_discard(*primary_, t);
        primary_.reset();
        discard_prestage(t);
        complete(id, t);
        return;
    }
    if (primary_) finish_discard(*primary_, t);
    primary_.reset();
    discard_prestage(t);
    cold_transfer(t, entered);
}

void UeController::on_trace_end(double t) {
    if (primary_) finish_discard(*primary_, t);
    primary_.reset();
    discard_prestage(t);
}

}  // namespace msmf
