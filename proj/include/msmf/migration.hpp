#pragma once

// Pre-copy container migration: image, checkpoint, dirty-memory iterations
// and the final stop-and-copy at handoff. Transfer progress is analytical,
// so a session can jump straight to the next time it changes state.

#include "msmf/topology.hpp"

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace msmf {

/// Linear start-up time model, clamped at the reference sizes.
struct StartTimeModel {
    double t_min_s = 0.2;
    double t_max_s = 1.0;
    double image_min_bytes = 100e6;
    double image_max_bytes = 2000e6;
};

struct ContainerSpec {
    std::int64_t image_bytes = 0;
    std::int64_t ram_bytes = 0;
    /// Fraction of ram dirtied per second.
    double dirty_rate_per_s = 0.01;
    StartTimeModel start;

    double dirty_bytes_per_s() const noexcept { return dirty_rate_per_s * static_cast<double>(ram_bytes); }
};

double start_time(const ContainerSpec& spec);

enum class Phase : std::uint8_t { Idle, ImageSync, CheckpointSync, IterativeSync, Stopped, Restoring, Done };

std::string_view to_string(Phase p) noexcept;

enum class TransferKind : std::uint8_t { Image, Checkpoint, Iteration, Handoff };

struct TransferLogEntry {
    TransferKind kind = TransferKind::Image;
    std::int64_t bytes = 0;
    double t_begin = 0.0;
    double duration_s = 0.0;
};

class MigrationSession {
public:
    /// `image_only` sessions stop after the image lands (branch prestaging).
    MigrationSession(ServerId source, ServerId target, ContainerSpec spec, double bandwidth_Bps,
                     std::int64_t threshold_bytes, bool image_only = false);

    void begin(double t);
    void tick(double dt);
    /// Processes every internal state change up to t.
    void advance_to(double t);
    /// Earliest time the session changes state on its own; infinity if never.
    double next_event_time() const noexcept;
    /// Stops the container and ships the remainder. Returns the downtime.
    double handoff(double t);
    /// Abandons the session; bytes already moved stay counted.
    void discard(double t);

    ServerId source() const noexcept { return source_; }
    ServerId target() const noexcept { return target_; }
    Phase phase() const noexcept { return phase_; }
    const ContainerSpec& spec() const noexcept { return spec_; }
    double bandwidth() const noexcept { return bandwidth_; }
    double now() const noexcept { return now_; }

    std::int64_t bytes_image_sent() const noexcept;
    std::int64_t bytes_checkpoint_sent() const noexcept;
    std::int64_t bytes_iterations_sent() const noexcept;
    std::int64_t bytes_handoff_sent() const noexcept { return bytes_handoff_; }
    double dirty_backlog() const noexcept;
    int iteration_count() const noexcept { return iterations_; }

    double t_started() const noexcept { return t_started_; }
    double t_stopped() const noexcept { return t_stopped_; }
    double t_restored() const noexcept { return t_restored_; }

    bool image_only() const noexcept { return image_only_; }
    bool discarded() const noexcept { return discarded_; }
    /// Reached iterative sync with the backlog below threshold at least once.
    bool converged() const noexcept { return converged_; }
    bool active() const noexcept { return phase_ != Phase::Idle && phase_ != Phase::Done; }
    bool transferring() const noexcept { return has_inflight_; }

    const std::vector<TransferLogEntry>& log() const noexcept { return log_; }

private:
    struct Inflight {
        TransferKind kind = TransferKind::Image;
        std::int64_t size = 0;
        double t_begin = 0.0;
    };

    double inflight_end() const noexcept;
    std::int64_t partial_bytes() const noexcept;
    void start(TransferKind kind, std::int64_t size, double t);
    void complete(double t);
    void maybe_trigger(double t);
    void accrue(double t);
    void commit_partial();

    ServerId source_;
    ServerId target_;
    ContainerSpec spec_;
    double bandwidth_;
    std::int64_t threshold_;
    bool image_only_;

    Phase phase_ = Phase::Idle;
    double now_ = 0.0;
    bool has_inflight_ = false;
    Inflight inflight_;

    std::int64_t image_done_ = 0;
    std::int64_t checkpoint_done_ = 0;
    std::int64_t iterations_done_ = 0;
    std::int64_t bytes_handoff_ = 0;
    int iterations_ = 0;

    bool dirtying_ = false;
    double backlog_ = 0.0;
    double backlog_time_ = 0.0;

    double t_started_ = 0.0;
    double t_stopped_ = 0.0;
    double t_restored_ = 0.0;
    bool discarded_ = false;
    bool converged_ = false;

    std::vector<TransferLogEntry> log_;
};

std::int64_t traffic(const MigrationSession& s) noexcept;

/// (image + checkpoint + iterations + handoff bytes) / bandwidth. Requires Done.
double total_migration_time(const MigrationSession& s, double bandwidth_Bps);

/// Sum of transfer durations in the session's event log.
double logged_transfer_time(const MigrationSession& s) noexcept;

inline constexpr double kNever = std::numeric_limits<double>::infinity();

}  // namespace msmf
