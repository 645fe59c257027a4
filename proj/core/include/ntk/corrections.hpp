#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ntk/finite_net.hpp"
#include "ntk/gram.hpp"
#include "ntk/spectral_decomp.hpp"

namespace ntk {

/// First-order dual number. Nesting Dual<Dual<double>> yields exact second
/// directional derivatives, which is how the third- and fourth-order kernels
/// are built without an external autodiff.
template <typename T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(T value) : v(std::move(value)) {} // NOLINT: implicit lift
    Dual(T value, T tangent) : v(std::move(value)), d(std::move(tangent)) {}

    Dual operator-() const { return {-v, -d}; }
    Dual& operator+=(const Dual& o) {
        v += o.v;
        d += o.d;
        return *this;
    }
    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        const T q = a.v / b.v;
        return {q, (a.d - q * b.d) / b.v};
    }
};

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) {
    return value_of(x.v);
}

inline double exp_g(double x) { return std::exp(x); }
template <typename T>
Dual<T> exp_g(const Dual<T>& x) {
    const T e = exp_g(x.v);
    return {e, x.d * e};
}

inline double log1p_g(double x) { return std::log1p(x); }
template <typename T>
Dual<T> log1p_g(const Dual<T>& x) {
    const T one{1.0};
    return {log1p_g(x.v), x.d / (one + x.v)};
}

/// Higher-order kernels of a dense net at initialization, all arguments
/// ranging over the evaluation set:
///   o2       (m x m)    O_2 = Theta-hat
///   o3[c]    (m x m)    O_3(., ., x_c)
///   o4[c][d] (m x m)    O_4(., ., x_c, x_d)
/// Entries carry their finite-width magnitudes (no 1/n rescaling).
struct HigherOrderKernels {
    Eigen::MatrixXd o2;
    std::vector<Eigen::MatrixXd> o3;
    std::vector<std::vector<Eigen::MatrixXd>> o4;
    int width = 0;

    int m() const { return static_cast<int>(o2.rows()); }
    Eigen::VectorXd o3_slice(int a, int b) const; // O_3(a, b, .)
};

struct HigherOrderBudget {
    int max_points = 10;
    int max_width = 256;
};

/// Nested-dual construction of O_2..O_4 for a dense net with a smooth (or
/// identity) activation. ReLU is rejected: its second derivative is a
/// distribution and the hierarchy is not defined for it.
HigherOrderKernels higher_order_kernels(const FiniteNet& net, const Eigen::MatrixXd& x,
                                        int s_max = 4, const HigherOrderBudget& budget = {});

struct ScalingProbeResult {
    std::vector<double> widths;
    std::vector<double> mean_abs; // mean |O_s| over seeds and entries
    std::vector<double> mean_sq;  // mean O_s^2
    double slope_mean_abs = 0.0;
    double slope_mean_abs_stderr = 0.0;
    double slope_mean_sq = 0.0;
    double slope_mean_sq_stderr = 0.0;
};

/// Log-log moment growth of O_s against width for the smooth two-layer
/// family. Needs >= 4 widths spanning >= 2 octaves and >= 20 seeds per width.
ScalingProbeResult scaling_probe(int input_dim, const std::vector<int>& widths, int s,
                                 int seeds_per_width, std::uint64_t root_seed,
                                 double softplus_beta = 20.0, int eval_points = 3);

/// State of the truncated correction dynamics at one grid time. All
/// first-order quantities are in absolute units (the measured kernels carry
/// their own 1/n), so corrected predictions are f0 + f1.
struct CorrectionState {
    double t = 0.0;
    Eigen::VectorXd f0;      // constant-kernel predictions on the train set
    Eigen::VectorXd f1;      // first-order prediction correction
    Eigen::MatrixXd o2_corr; // kernel drift O_2(t) - O_2(0)
};

/// Explicit stepping of the triangular first-order system on t_grid; the
/// zeroth order follows the constant-kernel closed form. Returns one state
/// per grid point (the first grid point must be 0).
std::vector<CorrectionState> truncated_ode_integrate(const HigherOrderKernels& kernels,
                                                     const Eigen::VectorXd& y,
                                                     const Eigen::VectorXd& f0,
                                                     const std::vector<double>& t_grid);

/// Closed-form kernel drift at time t (same quantity as
/// CorrectionState::o2_corr): the O_3 single integral plus the O_4 double
/// integral, the latter via the eigenmode sum with the
/// (1 - e^{-(l_k + l_l) t}) / (l_k + l_l) factors. Null modes are excluded;
/// a null mode coupled to the residual is an error.
Eigen::MatrixXd o2_correction_closed_form(const HigherOrderKernels& kernels,
                                          const SpectralDecomposition& decomp,
                                          const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                                          double t);

struct NthKernelResult {
    GramMatrix gram;              // kind = NTH
    Eigen::MatrixXd theta_se;     // Monte-Carlo standard error of E Theta-hat
    int ensemble = 0;
};

/// Label-aware NTH kernel with the zero-initial-output approximation:
/// E Theta-hat + y^T (E Theta)^{-1} E O_4(.,.,X,X) (E Theta)^{-1} y minus the
/// eigenmode coupling sum. Expectations are Monte-Carlo over initializations
/// (seeds derived from root_seed, reduced in seed order).
NthKernelResult nth_kernel(const ArchSpec& arch, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, int ensemble, std::uint64_t root_seed,
                           Activation activation = Activation::Softplus,
                           const HigherOrderBudget& budget = {});

struct HrOptions {
    double lambda_mix = 0.5;
    // Similarity of two kernel values; default Gaussian with bandwidth h.
    std::function<double(double, double)> psi;
    double bandwidth = 1.0;
    bool normalize = true; // convex weights over train pairs
};

/// K^HR = (1 - lambda) K + lambda Z with Z(x,x') = y^T M y,
/// M_ij = psi(K(x,x'), K(x_i,x_j)).
double hr_kernel_value(double k_value, const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                       const HrOptions& options);
Eigen::MatrixXd hr_kernel_mix(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                              const HrOptions& options);

} // namespace ntk
