#pragma once

#include <atomic>
#include <cstdint>

namespace ntk::flops {

// Device-independent work accounting. Counters are incremented explicitly at
// kernel-expectation, matvec, and factorization call sites. Split counters let
// reports distinguish the covariance pass (phi-phi) from the tangent pass.
struct Counters {
    std::atomic<std::uint64_t> flops{0};
    std::atomic<std::uint64_t> phi_expectations{0};
    std::atomic<std::uint64_t> dphi_expectations{0};

    void reset() {
        flops = 0;
        phi_expectations = 0;
        dphi_expectations = 0;
    }
};

Counters& counters();

inline void add(std::uint64_t n) { counters().flops.fetch_add(n, std::memory_order_relaxed); }
inline void count_phi_expectation() {
    counters().phi_expectations.fetch_add(1, std::memory_order_relaxed);
}
inline void count_dphi_expectation() {
    counters().dphi_expectations.fetch_add(1, std::memory_order_relaxed);
}

// Cost model constants (flops per call) for the closed-form expectations.
inline constexpr std::uint64_t kPhiExpectationCost = 14;
inline constexpr std::uint64_t kDphiExpectationCost = 8;

} // namespace ntk::flops
