#include "msmf/migration.hpp"

#include "msmf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace msmf {

double start_time(const ContainerSpec& spec) {
    const auto& m = spec.start;
    const double x = static_cast<double>(spec.image_bytes);
    if (x <= m.image_min_bytes) return m.t_min_s;
    if (x >= m.image_max_bytes) return m.t_max_s;
    const double f = (x - m.image_min_bytes) / (m.image_max_bytes - m.image_min_bytes);
    return m.t_min_s + f * (m.t_max_s - m.t_min_s);
}

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::Idle: return "idle";
        case Phase::ImageSync: return "image-sync";
        case Phase::CheckpointSync: return "checkpoint-sync";
        case Phase::IterativeSync: return "iterative-sync";
        case Phase::Stopped: return "stopped";
        case Phase::Restoring: return "restoring";
        case Phase::Done: return "done";
    }
    return "?";
}

MigrationSession::MigrationSession(ServerId source, ServerId target, ContainerSpec spec, double bandwidth_Bps,
                                   std::int64_t threshold_bytes, bool image_only)
    : source_(source),
      target_(target),
      spec_(spec),
      bandwidth_(bandwidth_Bps),
      threshold_(threshold_bytes),
      image_only_(image_only) {
    if (spec_.image_bytes <= 0) throw OutOfRange("image size must be positive");
    if (spec_.ram_bytes <= 0) throw OutOfRange("ram size must be positive");
    if (!(spec_.dirty_rate_per_s >= 0.0)) throw OutOfRange("dirty rate must be non-negative");
    if (!(bandwidth_ > 0.0)) throw OutOfRange("bandwidth must be positive");
    if (threshold_ <= 0) throw OutOfRange("iteration threshold must be positive");
}

void MigrationSession::begin(double t) {
    if (phase_ != Phase::Idle) throw AlreadyActive();
    phase_ = Phase::ImageSync;
    now_ = t;
    t_started_ = t;
    start(TransferKind::Image, spec_.image_bytes, t);
}

void MigrationSession::tick(double dt) {
    if (!active()) throw NotActive();
    if (!(dt > 0.0)) throw OutOfRange("dt must be positive");
    advance_to(now_ + dt);
}

double MigrationSession::inflight_end() const noexcept {
    return inflight_.t_begin + static_cast<double>(inflight_.size) / bandwidth_;
}

std::int64_t MigrationSession::partial_bytes() const noexcept {
    if (!has_inflight_) return 0;
    const double moved = std::floor(bandwidth_ * (now_ - inflight_.t_begin));
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(moved), 0, inflight_.size);
}

std::int64_t MigrationSession::bytes_image_sent() const noexcept {
    return image_done_ + (has_inflight_ && inflight_.kind == TransferKind::Image ? partial_bytes() : 0);
}

std::int64_t MigrationSession::bytes_checkpoint_sent() const noexcept {
    return checkpoint_done_ + (has_inflight_ && inflight_.kind == TransferKind::Checkpoint ? partial_bytes() : 0);
}

std::int64_t MigrationSession::bytes_iterations_sent() const noexcept {
    return iterations_done_ + (has_inflight_ && inflight_.kind == TransferKind::Iteration ? partial_bytes() : 0);
}

double MigrationSession::dirty_backlog() const noexcept {
    if (!dirtying_) return backlog_;
    return backlog_ + spec_.dirty_bytes_per_s() * (now_ - backlog_time_);
}

double MigrationSession::next_event_time() const noexcept {
    if (!active()) return kNever;
    if (has_inflight_) return inflight_end();
    const double rate = spec_.dirty_bytes_per_s();
    if (phase_ == Phase::IterativeSync && dirtying_ && rate > 0.0) {
        const double gap = std::max(0.0, static_cast<double>(threshold_) - backlog_);
        return backlog_time_ + gap / rate;
    }
    return kNever;
}

void MigrationSession::advance_to(double t) {
    if (t < now_) throw NonMonotonicTime(fmt::format("session time {} precedes {}", t, now_));
    while (active()) {
        const double te = next_event_time();
        if (te > t) break;
        now_ = std::max(now_, te);
        if (has_inflight_) {
            complete(now_);
        } else {
            accrue(now_);
            backlog_ = std::max(backlog_, static_cast<double>(threshold_));
            maybe_trigger(now_);
        }
    }
    now_ = t;
}

void MigrationSession::accrue(double t) {
    if (dirtying_) backlog_ += spec_.dirty_bytes_per_s() * (t - backlog_time_);
    backlog_time_ = t;
}

void MigrationSession::start(TransferKind kind, std::int64_t size, double t) {
    inflight_ = {kind, size, t};
    has_inflight_ = true;
}

void MigrationSession::maybe_trigger(double t) {
    if (backlog_ >= static_cast<double>(threshold_)) {
        const double whole = std::floor(backlog_);
        backlog_ -= whole;
        start(TransferKind::Iteration, static_cast<std::int64_t>(whole), t);
    } else {
        converged_ = true;
    }
}

void MigrationSession::complete(double t) {
    const Inflight done = inflight_;
    has_inflight_ = false;
    log_.push_back({done.kind, done.size, done.t_begin, static_cast<double>(done.size) / bandwidth_});
    switch (done.kind) {
        case TransferKind::Image:
            image_done_ = done.size;
            if (image_only_) return;
            phase_ = Phase::CheckpointSync;
            dirtying_ = true;
            backlog_ = 0.0;
            backlog_time_ = t;
            start(TransferKind::Checkpoint, spec_.ram_bytes, t);
            return;
        case TransferKind::Checkpoint:
            checkpoint_done_ = done.size;
            phase_ = Phase::IterativeSync;
            break;
        case TransferKind::Iteration:
            iterations_done_ += done.size;
            ++iterations_;
            break;
        case TransferKind::Handoff:
            return;
    }
    accrue(t);
    maybe_trigger(t);
}

// Books the bytes an interrupted transfer already moved.
void MigrationSession::commit_partial() {
    if (!has_inflight_) return;
    const std::int64_t part = partial_bytes();
    if (part > 0) log_.push_back({inflight_.kind, part, inflight_.t_begin, static_cast<double>(part) / bandwidth_});
    switch (inflight_.kind) {
        case TransferKind::Image: image_done_ += part; break;
        case TransferKind::Checkpoint: checkpoint_done_ += part; break;
        case TransferKind::Iteration: iterations_done_ += part; break;
        case TransferKind::Handoff: break;
    }
    has_inflight_ = false;
}

double MigrationSession::handoff(double t) {
    if (!active()) throw NotActive();
    advance_to(t);
    accrue(t);
    dirtying_ = false;

    std::int64_t remainder = (spec_.image_bytes - bytes_image_sent()) + (spec_.ram_bytes - bytes_checkpoint_sent());
    if (has_inflight_ && inflight_.kind == TransferKind::Iteration) remainder += inflight_.size - partial_bytes();
    commit_partial();
    remainder += static_cast<std::int64_t>(std::ceil(backlog_));
    backlog_ = 0.0;

    phase_ = Phase::Stopped;
    t_stopped_ = t;
    bytes_handoff_ = remainder;
    const double transfer = static_cast<double>(remainder) / bandwidth_;
    log_.push_back({TransferKind::Handoff, remainder, t, transfer});
    phase_ = Phase::Restoring;
    const double downtime = transfer + start_time(spec_);
    t_restored_ = t + downtime;
    phase_ = Phase::Done;
    return downtime;
}

void MigrationSession::discard(double t) {
    if (!active()) throw NotActive();
    advance_to(t);
    accrue(t);
    dirtying_ = false;
    commit_partial();
    t_stopped_ = t;
    t_restored_ = t;
    discarded_ = true;
    phase_ = Phase::Done;
}

std::int64_t traffic(const MigrationSession& s) noexcept {
    return s.bytes_image_sent() + s.bytes_checkpoint_sent() + s.bytes_iterations_sent() + s.bytes_handoff_sent();
}

double total_migration_time(const MigrationSession& s, double bandwidth_Bps) {
    if (s.phase() != Phase::Done) throw NotDone();
    return static_cast<double>(traffic(s)) / bandwidth_Bps;
}

double logged_transfer_time(const MigrationSession& s) noexcept {
    double sum = 0.0;
    for (const auto& e : s.log()) sum += e.duration_s;
    return sum;
}

}  // namespace msmf
