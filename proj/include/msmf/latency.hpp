#pragma once

#include <cstdint>
#include <string_view>

namespace msmf {

/// Tolerated end-to-end latency of a UE's offloaded task (L_i).
struct LatencyClass {
    enum class Name : std::uint8_t { Low, High };

    Name name = Name::Low;
    double deadline_s = 0.030;

    static constexpr LatencyClass low(double deadline_s = 0.030) { return {Name::Low, deadline_s}; }
    static constexpr LatencyClass high(double deadline_s = 0.150) { return {Name::High, deadline_s}; }

    friend bool operator==(const LatencyClass&, const LatencyClass&) = default;
};

constexpr std::string_view to_string(LatencyClass::Name n) noexcept {
    return n == LatencyClass::Name::Low ? "low" : "high";
}

}  // namespace msmf
