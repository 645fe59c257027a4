#include "ntk/bench.hpp"

#include <chrono>
#include <numeric>

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"
#include "ntk/gram.hpp"
#include "ntk/rng.hpp"
#include "ntk/solvers.hpp"

namespace ntk {

namespace {

template <typename Fn>
StageCost timed(Fn&& fn) {
    auto& counters = flops::counters();
    const std::uint64_t flops0 = counters.flops.load();
    const std::uint64_t phi0 = counters.phi_expectations.load();
    const std::uint64_t dphi0 = counters.dphi_expectations.load();
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    StageCost cost;
    cost.seconds = std::chrono::duration<double>(stop - start).count();
    cost.flops = counters.flops.load() - flops0;
    cost.phi_expectations = counters.phi_expectations.load() - phi0;
    cost.dphi_expectations = counters.dphi_expectations.load() - dphi0;
    return cost;
}

void check_ascending(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw ConfigError("bench sweep needs at least two sizes");
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) throw ConfigError("bench sweep sizes must ascend");
    }
}

Eigen::MatrixXd synthetic_rows(int m, int cols, std::uint64_t seed, bool unit) {
    NormalSampler rng(seed);
    Eigen::MatrixXd x(m, cols);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < cols; ++j) x(i, j) = rng();
        if (unit) x.row(i) /= x.row(i).norm();
    }
    return x;
}

void fit_slopes(BenchReport& report) {
    std::vector<double> sizes;
    for (const BenchPoint& p : report.points) sizes.push_back(static_cast<double>(p.size));
    for (const auto& [stage, unused] : report.points.front().stages) {
        std::vector<double> flops, seconds;
        for (const BenchPoint& p : report.points) {
            flops.push_back(static_cast<double>(p.stages.at(stage).flops));
            seconds.push_back(std::max(p.stages.at(stage).seconds, 1e-9));
        }
        report.flop_slopes[stage] = loglog_fit(sizes, flops);
        report.time_slopes[stage] = loglog_fit(sizes, seconds);
    }
}

} // namespace

BenchReport bench_m_sweep(const BenchConfig& config) {
    check_ascending(config.sizes);
    BenchReport report;
    report.sweep = "m";
    const ArchSpec arch = ArchSpec::dense(config.depth, config.input_dim);
    for (int m : config.sizes) {
        const Eigen::MatrixXd x = synthetic_rows(m, config.input_dim, config.seed + m, true);
        const Eigen::VectorXd y = synthetic_rows(m, 1, config.seed + 31 * m, false).col(0);
        BenchPoint point;
        point.size = m;
        GramMatrix g;
        point.stages["gram"] = timed([&] { g = gram(x, arch, GramKind::NTK); });
        point.stages["solve"] =
            timed([&] { (void)ridge_solve_direct(g.entries, y, config.lambda); });
        point.stages["integrate"] = timed([&] {
            (void)numeric_dynamics(g.entries, y, DynLoss::Square, config.eta,
                                   config.integrate_steps);
        });
        report.points.push_back(std::move(point));
    }
    fit_slopes(report);
    return report;
}

BenchReport bench_d_sweep(const BenchConfig& config) {
    check_ascending(config.sizes);
    BenchReport report;
    report.sweep = "d";
    const int m = 6;
    for (int d : config.sizes) {
        // Full-support circular filter: offsets covering every pixel.
        std::vector<int> offsets(d);
        std::iota(offsets.begin(), offsets.end(), 0);
        const ArchSpec arch = ArchSpec::conv1d(config.depth, 1, d, offsets);
        const Eigen::MatrixXd x = synthetic_rows(m, d, config.seed + d, false);
        BenchPoint point;
        point.size = d;
        point.stages["conv_gram"] = timed([&] { (void)gram(x, arch, GramKind::NTK); });
        report.points.push_back(std::move(point));
    }
    fit_slopes(report);
    return report;
}

} // namespace ntk
