#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ntk/fit.hpp"

namespace ntk {

struct StageCost {
    double seconds = 0.0;
    std::uint64_t flops = 0;
    std::uint64_t phi_expectations = 0;
    std::uint64_t dphi_expectations = 0;
};

struct BenchPoint {
    long size = 0; // m or d
    std::map<std::string, StageCost> stages;
};

struct BenchReport {
    std::string sweep; // "m" or "d"
    std::vector<BenchPoint> points;
    // Fitted log-log slopes of the flop counters and of wall time per stage.
    std::map<std::string, LogLogFit> flop_slopes;
    std::map<std::string, LogLogFit> time_slopes;
};

struct BenchConfig {
    std::vector<int> sizes;
    int input_dim = 8;
    int depth = 3;
    long integrate_steps = 200;
    double eta = 1e-3;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
};

/// Dataset-size sweep: gram construction, direct ridge solve, and numeric
/// square-loss integration on synthetic unit-norm data. Sizes must ascend.
BenchReport bench_m_sweep(const BenchConfig& config);

/// Pixel-count sweep of the conv gram with a full-support filter, the regime
/// where per-pair cost grows with the fourth power of resolution.
BenchReport bench_d_sweep(const BenchConfig& config);

} // namespace ntk
