#include "ntk/corrections.hpp"

#include <cmath>

#include "ntk/errors.hpp"
#include "ntk/fit.hpp"
#include "ntk/rng.hpp"

namespace ntk {

namespace {

// Dense-net shape lifted out of a FiniteNet so the templated passes can run
// on dual scalars over the same weights and scale conventions.
struct DenseShape {
    std::vector<int> widths;  // n_0 .. n_L
    std::vector<double> scale; // forward scale per layer (index 1..L)
    Activation activation;
    double beta;

    int depth() const { return static_cast<int>(widths.size()) - 1; }
    long param_count() const {
        long n = 0;
        for (int l = 1; l <= depth(); ++l) n += static_cast<long>(widths[l]) * widths[l - 1];
        return n;
    }
};

DenseShape shape_of(const FiniteNet& net) {
    if (net.arch().is_conv()) {
        throw ConfigError("higher-order kernels are implemented for dense nets");
    }
    if (net.activation() == Activation::ReLU) {
        throw NumericError(
            "higher-order kernels need a smooth activation; use the softplus surrogate");
    }
    DenseShape shape;
    shape.widths.resize(net.depth() + 1);
    shape.scale.resize(net.depth() + 1, 1.0);
    for (int l = 0; l <= net.depth(); ++l) shape.widths[l] = net.width(l);
    for (int l = 1; l <= net.depth(); ++l) shape.scale[l] = net.forward_scale(l);
    shape.activation = net.activation();
    shape.beta = 20.0;
    return shape;
}

std::vector<double> flat_params(const FiniteNet& net) {
    const Eigen::VectorXd p = net.params();
    return std::vector<double>(p.data(), p.data() + p.size());
}

template <typename T>
T softplus_g(const T& z, double beta) {
    const T bz = T{beta} * z;
    if (value_of(z) > 0.0) return z + log1p_g(exp_g(-bz)) / T{beta};
    return log1p_g(exp_g(bz)) / T{beta};
}

template <typename T>
T sigmoid_g(const T& z, double beta) {
    return T{1.0} / (T{1.0} + exp_g(-(T{beta} * z)));
}

template <typename T>
T act_g(const T& z, Activation act, double beta) {
    return act == Activation::Identity ? z : softplus_g(z, beta);
}

template <typename T>
T act_deriv_g(const T& z, Activation act, double beta) {
    return act == Activation::Identity ? T{1.0} : sigmoid_g(z, beta);
}

// Reverse pass over a generic scalar: value and full parameter gradient.
template <typename T>
T dense_grad(const DenseShape& shape, const std::vector<T>& params, const Eigen::VectorXd& x,
             std::vector<T>& grad) {
    const int depth = shape.depth();
    std::vector<std::vector<T>> acts(depth);  // layer inputs x_0 .. x_{L-1}
    std::vector<std::vector<T>> pre(depth);   // preactivations h_1 .. h_L
    std::vector<T> cur(x.size());
    for (long i = 0; i < x.size(); ++i) cur[i] = T{x(i)};

    long pos = 0;
    for (int l = 1; l <= depth; ++l) {
        acts[l - 1] = cur;
        const int rows = shape.widths[l];
        const int cols = shape.widths[l - 1];
        std::vector<T> h(rows, T{0.0});
        for (int i = 0; i < rows; ++i) {
            T acc{0.0};
            const T* w = params.data() + pos + static_cast<long>(i) * cols;
            for (int j = 0; j < cols; ++j) acc += w[j] * cur[j];
            h[i] = T{shape.scale[l]} * acc;
        }
        pos += static_cast<long>(rows) * cols;
        pre[l - 1] = h;
        if (l < depth) {
            cur.assign(rows, T{0.0});
            for (int i = 0; i < rows; ++i) cur[i] = act_g(h[i], shape.activation, shape.beta);
        }
    }
    const T value = pre[depth - 1][0];

    grad.assign(params.size(), T{0.0});
    std::vector<T> delta(1, T{1.0});
    pos = static_cast<long>(shape.param_count());
    for (int l = depth; l >= 1; --l) {
        const int rows = shape.widths[l];
        const int cols = shape.widths[l - 1];
        pos -= static_cast<long>(rows) * cols;
        for (int i = 0; i < rows; ++i) {
            const T coeff = T{shape.scale[l]} * delta[i];
            T* g = grad.data() + pos + static_cast<long>(i) * cols;
            for (int j = 0; j < cols; ++j) g[j] += coeff * acts[l - 1][j];
        }
        if (l > 1) {
            std::vector<T> next(cols, T{0.0});
            for (int j = 0; j < cols; ++j) {
                T acc{0.0};
                for (int i = 0; i < rows; ++i) {
                    acc += params[pos + static_cast<long>(i) * cols + j] * delta[i];
                }
                next[j] = T{shape.scale[l]} * acc *
                          act_deriv_g(pre[l - 2][j], shape.activation, shape.beta);
            }
            delta = std::move(next);
        }
    }
    return value;
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
    T acc{0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;

} // namespace

Eigen::VectorXd HigherOrderKernels::o3_slice(int a, int b) const {
    Eigen::VectorXd out(m());
    for (int c = 0; c < m(); ++c) out(c) = o3[c](a, b);
    return out;
}

HigherOrderKernels higher_order_kernels(const FiniteNet& net, const Eigen::MatrixXd& x, int s_max,
                                        const HigherOrderBudget& budget) {
    const int m = static_cast<int>(x.rows());
    if (s_max < 2 || s_max > 4) throw ConfigError("s_max must be in {2,3,4}");
    if (m > budget.max_points) {
        throw BudgetError("higher-order kernels: evaluation set exceeds the point budget");
    }
    const DenseShape shape = shape_of(net);
    for (int l = 1; l < shape.depth(); ++l) {
        if (shape.widths[l] > budget.max_width) {
            throw BudgetError("higher-order kernels: width exceeds the budget");
        }
    }
    const std::vector<double> theta = flat_params(net);
    const long n_params = shape.param_count();

    HigherOrderKernels out;
    out.width = net.depth() > 1 ? net.width(1) : net.width(0);

    // Base gradients and O_2.
    std::vector<std::vector<double>> grads(m);
    std::vector<double> scratch;
    for (int i = 0; i < m; ++i) {
        dense_grad(shape, theta, x.row(i).transpose(), grads[i]);
    }
    out.o2.resize(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            out.o2(i, j) = out.o2(j, i) = dot(grads[i], grads[j]);
        }
    }
    if (s_max < 3) return out;

    // O_3(a, b, c): tangent of O_2(a, b) along grad f(x_c).
    out.o3.resize(m);
    std::vector<D1> theta_d1(n_params);
    std::vector<std::vector<D1>> grads_d1(m);
    for (int c = 0; c < m; ++c) {
        for (long p = 0; p < n_params; ++p) theta_d1[p] = D1{theta[p], grads[c][p]};
        for (int i = 0; i < m; ++i) {
            dense_grad(shape, theta_d1, x.row(i).transpose(), grads_d1[i]);
        }
        out.o3[c].resize(m, m);
        for (int a = 0; a < m; ++a) {
            for (int b = a; b < m; ++b) {
                const D1 o2ab = dot(grads_d1[a], grads_d1[b]);
                out.o3[c](a, b) = out.o3[c](b, a) = o2ab.d;
            }
        }
    }
    if (s_max < 4) return out;

    // O_4(a, b, c, e): outer tangent along grad f(x_e) of O_3(a, b, c). The
    // inner direction grad f(x_c) is re-evaluated at the outer-dual weights,
    // which is exactly what the nested construction prescribes.
    out.o4.assign(m, std::vector<Eigen::MatrixXd>(m));
    std::vector<D1> psi(n_params);
    std::vector<D2> phi(n_params);
    std::vector<std::vector<D2>> grads_d2(m);
    std::vector<D1> g_inner;
    for (int e = 0; e < m; ++e) {
        for (long p = 0; p < n_params; ++p) psi[p] = D1{theta[p], grads[e][p]};
        for (int c = 0; c < m; ++c) {
            dense_grad(shape, psi, x.row(c).transpose(), g_inner);
            for (long p = 0; p < n_params; ++p) phi[p] = D2{psi[p], g_inner[p]};
            for (int i = 0; i < m; ++i) {
                dense_grad(shape, phi, x.row(i).transpose(), grads_d2[i]);
            }
            Eigen::MatrixXd slice(m, m);
            for (int a = 0; a < m; ++a) {
                for (int b = a; b < m; ++b) {
                    const D2 o2ab = dot(grads_d2[a], grads_d2[b]);
                    slice(a, b) = slice(b, a) = o2ab.d.d;
                }
            }
            out.o4[c][e] = std::move(slice);
        }
    }
    return out;
}

ScalingProbeResult scaling_probe(int input_dim, const std::vector<int>& widths, int s,
                                 int seeds_per_width, std::uint64_t root_seed,
                                 double softplus_beta, int eval_points) {
    if (widths.size() < 4) throw ConfigError("scaling probe needs at least 4 widths");
    const double span = static_cast<double>(*std::max_element(widths.begin(), widths.end())) /
                        *std::min_element(widths.begin(), widths.end());
    if (span < 4.0) throw ConfigError("scaling probe widths must span at least two octaves");
    if (seeds_per_width < 20) throw ConfigError("scaling probe needs at least 20 seeds per width");
    if (s < 2 || s > 4) throw ConfigError("scaling probe supports s in {2,3,4}");

    // Fixed evaluation set, same for every width and seed.
    NormalSampler data_rng(split_seed(root_seed, 0xDA7A));
    Eigen::MatrixXd x(eval_points, input_dim);
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) x(i, j) = data_rng();
        x.row(i) /= x.row(i).norm();
    }

    ScalingProbeResult result;
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        const int n = widths[wi];
        double sum_abs = 0.0;
        double sum_sq = 0.0;
        long count = 0;
        for (int seed_idx = 0; seed_idx < seeds_per_width; ++seed_idx) {
            FiniteNet net(ArchSpec::dense(2, input_dim, {n}), Parameterization::NTK,
                          split_seed(root_seed, (wi + 1) * 10000 + seed_idx),
                          Activation::Softplus, softplus_beta);
            const HigherOrderKernels kernels = higher_order_kernels(
                net, x, s, HigherOrderBudget{eval_points, n});
            auto visit = [&](double v) {
                sum_abs += std::abs(v);
                sum_sq += v * v;
                ++count;
            };
            const int m = eval_points;
            if (s == 2) {
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) visit(kernels.o2(a, b));
            } else if (s == 3) {
                for (int c = 0; c < m; ++c)
                    for (int a = 0; a < m; ++a)
                        for (int b = 0; b < m; ++b) visit(kernels.o3[c](a, b));
            } else {
                for (int c = 0; c < m; ++c)
                    for (int e = 0; e < m; ++e)
                        for (int a = 0; a < m; ++a)
                            for (int b = 0; b < m; ++b) visit(kernels.o4[c][e](a, b));
            }
        }
        result.widths.push_back(static_cast<double>(n));
        result.mean_abs.push_back(sum_abs / count);
        result.mean_sq.push_back(sum_sq / count);
    }

    const LogLogFit fit_abs = loglog_fit(result.widths, result.mean_abs);
    const LogLogFit fit_sq = loglog_fit(result.widths, result.mean_sq);
    result.slope_mean_abs = fit_abs.slope;
    result.slope_mean_abs_stderr = fit_abs.slope_stderr;
    result.slope_mean_sq = fit_sq.slope;
    result.slope_mean_sq_stderr = fit_sq.slope_stderr;
    return result;
}

std::vector<CorrectionState> truncated_ode_integrate(const HigherOrderKernels& kernels,
                                                     const Eigen::VectorXd& y,
                                                     const Eigen::VectorXd& f0,
                                                     const std::vector<double>& t_grid) {
    const int m = kernels.m();
    if (y.size() != m || f0.size() != m) throw ConfigError("truncated ode: shape mismatch");
    if (t_grid.empty() || t_grid.front() != 0.0) throw ConfigError("t_grid must start at 0");
    if (kernels.o3.empty() || kernels.o4.empty()) {
        throw ConfigError("truncated ode needs kernels up to order 4");
    }
    const SpectralDecomposition decomp = decompose(kernels.o2);
    if (decomp.lambdas(m - 1) <= decomp.null_threshold()) {
        throw NumericError("truncated ode: kernel must be positive definite");
    }

    auto f0_at = [&](double t) -> Eigen::VectorXd {
        return y + decomp.apply_function(f0 - y,
                                         [&](double lam) { return std::exp(-lam * t); });
    };

    std::vector<CorrectionState> states;
    states.reserve(t_grid.size());

    Eigen::VectorXd f1 = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd c2 = Eigen::MatrixXd::Zero(m, m);
    std::vector<Eigen::MatrixXd> c3(m);
    for (int c = 0; c < m; ++c) c3[c] = kernels.o3[c];

    auto push_state = [&](double t) {
        CorrectionState st;
        st.t = t;
        st.f0 = f0_at(t);
        st.f1 = f1;
        st.o2_corr = c2;
        states.push_back(std::move(st));
    };
    push_state(0.0);

    for (std::size_t g = 1; g < t_grid.size(); ++g) {
        const double t_prev = t_grid[g - 1];
        const double dt = t_grid[g] - t_prev;
        if (dt <= 0.0) throw ConfigError("t_grid must be increasing");
        const Eigen::VectorXd r = y - f0_at(t_prev); // drive term
        // d c2 = O_3(., ., X) r ; d c3 = O_4(., ., c, X) r ; O_4 frozen.
        Eigen::MatrixXd c2_dot = Eigen::MatrixXd::Zero(m, m);
        for (int c = 0; c < m; ++c) c2_dot += c3[c] * r(c);
        Eigen::VectorXd f1_dot(m);
        const Eigen::VectorXd o2f1 = kernels.o2 * f1;
        for (int a = 0; a < m; ++a) {
            double drive = 0.0;
            for (int j = 0; j < m; ++j) drive += c2(a, j) * r(j);
            f1_dot(a) = drive - o2f1(a);
        }
        for (int c = 0; c < m; ++c) {
            Eigen::MatrixXd c3_dot = Eigen::MatrixXd::Zero(m, m);
            for (int e = 0; e < m; ++e) c3_dot += kernels.o4[c][e] * r(e);
            c3[c] += dt * c3_dot;
        }
        c2 += dt * c2_dot;
        f1 += dt * f1_dot;
        push_state(t_grid[g]);
    }
    return states;
}

Eigen::MatrixXd o2_correction_closed_form(const HigherOrderKernels& kernels,
                                          const SpectralDecomposition& decomp,
                                          const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                                          double t) {
    const int m = kernels.m();
    if (kernels.o3.empty() || kernels.o4.empty()) {
        throw ConfigError("closed form needs kernels up to order 4");
    }
    const double null_thr = decomp.null_threshold();
    const Eigen::VectorXd r0 = f0 - y;
    const Eigen::VectorXd modes = decomp.vectors.transpose() * r0;
    for (int k = 0; k < m; ++k) {
        if (decomp.lambdas(k) <= null_thr && std::abs(modes(k)) > 1e-10 * r0.norm()) {
            throw NumericError("closed form: null mode couples to the residual");
        }
    }

    // w = Theta^{-1} (I - e^{-Theta t}) r0 over the retained modes.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd theta_inv_r = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k) {
        if (decomp.lambdas(k) <= null_thr) continue;
        const double lam = decomp.lambdas(k);
        w += (1.0 - std::exp(-lam * t)) / lam * modes(k) * decomp.vectors.col(k);
        theta_inv_r += modes(k) / lam * decomp.vectors.col(k);
    }

    Eigen::MatrixXd drift(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            double single = 0.0; // O_3 integral
            for (int c = 0; c < m; ++c) single += kernels.o3[c](a, b) * w(c);

            // O_4 contracted once with Theta^{-1} r0 and once with w ...
            double double_full = 0.0;
            // ... minus the eigenmode-pair sum of the second integral.
            double double_modes = 0.0;
            for (int c = 0; c < m; ++c) {
                for (int e = 0; e < m; ++e) {
                    double_full += theta_inv_r(c) * kernels.o4[c][e](a, b) * w(e);
                }
            }
            for (int k = 0; k < m; ++k) {
                if (decomp.lambdas(k) <= null_thr) continue;
                for (int l = 0; l < m; ++l) {
                    if (decomp.lambdas(l) <= null_thr) continue;
                    const double lam_sum = decomp.lambdas(k) + decomp.lambdas(l);
                    double coupling = 0.0;
                    for (int c = 0; c < m; ++c) {
                        for (int e = 0; e < m; ++e) {
                            coupling += decomp.vectors(c, k) * kernels.o4[c][e](a, b) *
                                        decomp.vectors(e, l);
                        }
                    }
                    double_modes += (1.0 - std::exp(-lam_sum * t)) / lam_sum *
                                    modes(k) / decomp.lambdas(k) * coupling * modes(l);
                }
            }
            const double v = -single + double_full - double_modes;
            drift(a, b) = v;
            drift(b, a) = v;
        }
    }
    return drift;
}

NthKernelResult nth_kernel(const ArchSpec& arch, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, int ensemble, std::uint64_t root_seed,
                           Activation activation, const HigherOrderBudget& budget) {
    const int m = static_cast<int>(x.rows());
    if (ensemble < 1) throw ConfigError("nth kernel needs an ensemble of at least 1");
    if (y.size() != m) throw ConfigError("nth kernel: labels disagree with dataset");
    if (m > budget.max_points) throw BudgetError("nth kernel: dataset exceeds the point budget");

    Eigen::MatrixXd theta_mean = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd theta_second = Eigen::MatrixXd::Zero(m, m);
    std::vector<std::vector<Eigen::MatrixXd>> o4_mean(
        m, std::vector<Eigen::MatrixXd>(m, Eigen::MatrixXd::Zero(m, m)));

    // Fixed reduction order (by seed index) keeps the estimate deterministic.
    for (int k = 0; k < ensemble; ++k) {
        FiniteNet net(arch, Parameterization::NTK, split_seed(root_seed, k), activation);
        const HigherOrderKernels kernels = higher_order_kernels(net, x, 4, budget);
        theta_mean += kernels.o2;
        theta_second += kernels.o2.cwiseProduct(kernels.o2);
        for (int c = 0; c < m; ++c) {
            for (int e = 0; e < m; ++e) o4_mean[c][e] += kernels.o4[c][e];
        }
    }
    theta_mean /= ensemble;
    theta_second /= ensemble;
    for (int c = 0; c < m; ++c) {
        for (int e = 0; e < m; ++e) o4_mean[c][e] /= ensemble;
    }

    const SpectralDecomposition decomp = decompose(theta_mean);
    if (decomp.lambdas(m - 1) <= decomp.null_threshold()) {
        throw NumericError("nth kernel: mean kernel is singular");
    }
    const Eigen::VectorXd theta_inv_y =
        decomp.apply_function(y, [](double lam) { return 1.0 / lam; });
    const Eigen::VectorXd y_modes = decomp.vectors.transpose() * y;

    NthKernelResult out;
    out.ensemble = ensemble;
    out.gram.kind = GramKind::NTH;
    out.gram.fingerprint = arch_fingerprint(arch);
    out.gram.entries.resize(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            double label_term = 0.0;
            double mode_term = 0.0;
            for (int c = 0; c < m; ++c) {
                for (int e = 0; e < m; ++e) {
                    label_term += theta_inv_y(c) * o4_mean[c][e](a, b) * theta_inv_y(e);
                }
            }
            for (int k = 0; k < m; ++k) {
                for (int l = 0; l < m; ++l) {
                    double coupling = 0.0;
                    for (int c = 0; c < m; ++c) {
                        for (int e = 0; e < m; ++e) {
                            coupling += decomp.vectors(c, k) * o4_mean[c][e](a, b) *
                                        decomp.vectors(e, l);
                        }
                    }
                    mode_term += y_modes(k) * y_modes(l) * coupling /
                                 (decomp.lambdas(k) * (decomp.lambdas(k) + decomp.lambdas(l)));
                }
            }
            const double v = theta_mean(a, b) + label_term - mode_term;
            out.gram.entries(a, b) = v;
            out.gram.entries(b, a) = v;
        }
    }
    out.theta_se = ((theta_second - theta_mean.cwiseProduct(theta_mean)) /
                    std::max(ensemble - 1, 1))
                       .cwiseMax(0.0)
                       .cwiseSqrt() /
                   std::sqrt(static_cast<double>(ensemble));
    return out;
}

namespace {

double default_psi(double z1, double z2, double h) {
    const double diff = z1 - z2;
    return std::exp(-diff * diff / (2.0 * h * h));
}

} // namespace

double hr_kernel_value(double k_value, const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                       const HrOptions& options) {
    if (options.lambda_mix < 0.0 || options.lambda_mix > 1.0) {
        throw ConfigError("lambda_mix must lie in [0,1]");
    }
    const int m = static_cast<int>(k_train.rows());
    auto psi = [&](double a, double b) {
        return options.psi ? options.psi(a, b) : default_psi(a, b, options.bandwidth);
    };
    double z = 0.0;
    double weight_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double wij = psi(k_value, k_train(i, j));
            z += wij * y(i) * y(j);
            weight_sum += wij;
        }
    }
    if (options.normalize) {
        z = weight_sum > 0.0 ? z / weight_sum : 0.0;
    }
    return (1.0 - options.lambda_mix) * k_value + options.lambda_mix * z;
}

Eigen::MatrixXd hr_kernel_mix(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                              const HrOptions& options) {
    const int m = static_cast<int>(k_train.rows());
    Eigen::MatrixXd out(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const double v = hr_kernel_value(k_train(i, j), k_train, y, options);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

} // namespace ntk
