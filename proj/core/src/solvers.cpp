#include "ntk/solvers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ntk/errors.hpp"
#include "ntk/fc_kernel.hpp"
#include "ntk/flops.hpp"
#include "ntk/rng.hpp"

namespace ntk {

Eigen::VectorXd RidgeSolution::predict(const Eigen::MatrixXd& kernel_to_anchors) const {
    if (kernel_to_anchors.cols() != alpha.size()) {
        throw ConfigError("kernel row width does not match coefficient count");
    }
    return kernel_to_anchors * alpha;
}

RidgeSolution ridge_solve_direct(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                                 double lambda) {
    if (gram.rows() != gram.cols() || gram.rows() != y.size()) {
        throw ConfigError("ridge solve: shape mismatch");
    }
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    const int m = static_cast<int>(gram.rows());
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    flops::add(static_cast<std::uint64_t>(m) * m * m / 3 + 2ULL * m * m);
    if (ldlt.info() != Eigen::Success) {
        throw NumericError("ridge solve: factorization failed (singular system at lambda=0?)");
    }
    RidgeSolution sol;
    sol.lambda = lambda;
    sol.alpha = ldlt.solve(y);
    const double residual = (shifted * sol.alpha - y).norm();
    if (!sol.alpha.allFinite() || residual > 1e-8 * std::max(y.norm(), 1e-300)) {
        throw NumericError("ridge solve: system is numerically singular; increase lambda");
    }
    return sol;
}

NystromSolution nystrom_cg_solve(const KernelFn& kernel, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, const NystromOptions& options) {
    const int m = static_cast<int>(x.rows());
    if (m < 1 || y.size() != m) throw ConfigError("nystrom: shape mismatch");
    if (options.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    int mp = options.anchors > 0 ? options.anchors
                                 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
    if (mp > m) throw ConfigError("nystrom: anchor count exceeds dataset size");

    // Uniform sample without replacement, seeded.
    std::vector<int> pool(m);
    std::iota(pool.begin(), pool.end(), 0);
    std::mt19937_64 gen(options.seed);
    for (int i = 0; i < mp; ++i) {
        const int j = i + static_cast<int>(gen() % static_cast<std::uint64_t>(m - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> anchors(pool.begin(), pool.begin() + mp);
    std::sort(anchors.begin(), anchors.end());

    // Rectangular kernel block K_am (m' x m) and the small anchor block.
    Eigen::MatrixXd k_am(mp, m);
    for (int a = 0; a < mp; ++a) {
        for (int j = 0; j < m; ++j) {
            k_am(a, j) = kernel(x.row(anchors[a]).transpose(), x.row(j).transpose());
        }
    }
    Eigen::MatrixXd k_aa(mp, mp);
    for (int a = 0; a < mp; ++a) {
        for (int b = 0; b < mp; ++b) k_aa(a, b) = k_am(a, anchors[b]);
    }

    const Eigen::VectorXd rhs = k_am * y;
    auto matvec = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        // Two rectangular products; the m' x m' kernel-kernel product is
        // never materialized.
        flops::add(static_cast<std::uint64_t>(4) * mp * m + 2ULL * mp * mp);
        return k_am * (k_am.transpose() * v) + options.lambda * (k_aa * v);
    };

    const int max_iters = options.max_iters > 0
                              ? options.max_iters
                              : static_cast<int>(std::ceil(10.0 * std::log(std::max(m, 2))));
    const double rhs_norm = rhs.norm();

    NystromSolution out;
    out.solution.lambda = options.lambda;
    out.solution.anchors = anchors;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(mp);
    if (rhs_norm == 0.0) {
        out.solution.alpha = alpha;
        out.converged = true;
        out.residual = 0.0;
        return out;
    }

    Eigen::VectorXd r = rhs;
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    // Smoothed iterate: keeps the reported residual non-increasing even when
    // the raw CG residual oscillates.
    Eigen::VectorXd alpha_s = alpha;
    Eigen::VectorXd r_s = r;
    out.residual_history.push_back(r_s.norm() / rhs_norm);

    int iters = 0;
    for (; iters < max_iters; ++iters) {
        if (std::sqrt(rr) / rhs_norm <= options.tol) break;
        const Eigen::VectorXd ap = matvec(p);
        const double denom = p.dot(ap);
        if (denom <= 0.0) break; // numerically lost positive definiteness
        const double step = rr / denom;
        alpha += step * p;
        r -= step * ap;
        const double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;

        const Eigen::VectorXd dr = r - r_s;
        const double dn = dr.squaredNorm();
        const double gamma = dn > 0.0 ? std::clamp(-r_s.dot(dr) / dn, 0.0, 1.0) : 0.0;
        alpha_s += gamma * (alpha - alpha_s);
        r_s += gamma * dr;
        out.residual_history.push_back(r_s.norm() / rhs_norm);
        if (r_s.norm() / rhs_norm <= options.tol) {
            ++iters;
            break;
        }
    }
    out.iterations = iters;
    out.solution.alpha = alpha_s;
    out.residual = r_s.norm() / rhs_norm;
    out.converged = out.residual <= options.tol;
    return out;
}

Eigen::MatrixXd multiclass_block_solve(const Eigen::MatrixXd& gram_scalar,
                                       const Eigen::MatrixXd& y, double lambda) {
    if (gram_scalar.rows() != y.rows()) throw ConfigError("block solve: shape mismatch");
    Eigen::MatrixXd shifted = gram_scalar;
    shifted.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    const int m = static_cast<int>(gram_scalar.rows());
    flops::add(static_cast<std::uint64_t>(m) * m * m / 3 +
               2ULL * m * m * static_cast<std::uint64_t>(y.cols()));
    if (ldlt.info() != Eigen::Success) {
        throw NumericError("block solve: factorization failed");
    }
    Eigen::MatrixXd alpha = ldlt.solve(y);
    if (!alpha.allFinite() ||
        (shifted * alpha - y).norm() > 1e-8 * std::max(y.norm(), 1e-300)) {
        throw NumericError("block solve: singular system; increase lambda");
    }
    return alpha;
}

namespace {

Eigen::MatrixXd loss_drive(DynLoss loss, const Eigen::MatrixXd& y, const Eigen::MatrixXd& f) {
    switch (loss) {
        case DynLoss::Square: return y - f;
        case DynLoss::Bce: {
            Eigen::MatrixXd drive = y;
            for (int i = 0; i < f.rows(); ++i) {
                drive(i, 0) = y(i, 0) - 1.0 / (1.0 + std::exp(-f(i, 0)));
            }
            return drive;
        }
        case DynLoss::SoftmaxXent: {
            Eigen::MatrixXd drive(f.rows(), f.cols());
            for (int i = 0; i < f.rows(); ++i) {
                const double mx = f.row(i).maxCoeff();
                Eigen::VectorXd e = (f.row(i).array() - mx).exp().matrix().transpose();
                e /= e.sum();
                drive.row(i) = y.row(i) - e.transpose();
            }
            return drive;
        }
    }
    return y - f;
}

double loss_total(DynLoss loss, const Eigen::MatrixXd& y, const Eigen::MatrixXd& f) {
    double total = 0.0;
    switch (loss) {
        case DynLoss::Square: total = 0.5 * (y - f).squaredNorm(); break;
        case DynLoss::Bce:
            for (int i = 0; i < f.rows(); ++i) {
                const double z = f(i, 0);
                total += std::max(z, 0.0) - z * y(i, 0) + std::log1p(std::exp(-std::abs(z)));
            }
            break;
        case DynLoss::SoftmaxXent:
            for (int i = 0; i < f.rows(); ++i) {
                const double mx = f.row(i).maxCoeff();
                const double lse = mx + std::log((f.row(i).array() - mx).exp().sum());
                total += lse - y.row(i).dot(f.row(i));
            }
            break;
    }
    return total;
}

} // namespace

NumericDynamicsResult numeric_dynamics(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& y,
                                       DynLoss loss, double eta, long steps,
                                       const Eigen::MatrixXd* f0) {
    if (gram.rows() != gram.cols() || gram.rows() != y.rows()) {
        throw ConfigError("numeric dynamics: shape mismatch");
    }
    if (loss != DynLoss::SoftmaxXent && y.cols() != 1) {
        throw ConfigError("scalar losses expect a single label column");
    }
    if (eta <= 0.0 || steps < 0) throw ConfigError("need eta > 0 and steps >= 0");

    NumericDynamicsResult out;
    out.predictions = f0 ? *f0 : Eigen::MatrixXd::Zero(y.rows(), y.cols());
    const double initial = loss_total(loss, y, out.predictions);
    out.losses.push_back(initial);
    for (long t = 0; t < steps; ++t) {
        out.predictions += eta * gram * loss_drive(loss, y, out.predictions);
        flops::add(static_cast<std::uint64_t>(2) * gram.rows() * gram.rows() * y.cols());
        const double value = loss_total(loss, y, out.predictions);
        out.losses.push_back(value);
        if (!std::isfinite(value) || value > 1e6 * std::max(initial, 1.0)) {
            out.diverged_at = t + 1;
            break;
        }
    }
    return out;
}

Eigen::MatrixXd matrix_completion_fit(const Eigen::MatrixXd& z_prior, int rows,
                                      const std::vector<Observation>& observed, int depth,
                                      double lambda) {
    const int d = static_cast<int>(z_prior.cols());
    if (rows < 1) throw ConfigError("matrix completion: rows must be >= 1");

    // Column kernel shared by every row solve: the depth-L fc limit kernel of
    // the prior columns, computed once.
    Eigen::MatrixXd column_gram(d, d);
    for (int j = 0; j < d; ++j) {
        for (int jp = j; jp < d; ++jp) {
            const Eigen::VectorXd a = z_prior.col(j);
            const Eigen::VectorXd b = z_prior.col(jp);
            const double v = fc_ntk(std::span<const double>(a.data(), a.size()),
                                    std::span<const double>(b.data(), b.size()), depth)
                                 .theta;
            column_gram(j, jp) = v;
            column_gram(jp, j) = v;
        }
    }

    std::vector<std::vector<Observation>> by_row(rows);
    for (const Observation& obs : observed) {
        if (obs.row < 0 || obs.row >= rows || obs.col < 0 || obs.col >= d) {
            throw ConfigError("matrix completion: observation index out of range");
        }
        by_row[obs.row].push_back(obs);
    }

    Eigen::MatrixXd completed = Eigen::MatrixXd::Zero(rows, d);
    for (int i = 0; i < rows; ++i) {
        const auto& obs = by_row[i];
        if (obs.empty()) continue; // prior mean
        const int k = static_cast<int>(obs.size());
        Eigen::MatrixXd sub(k, k);
        Eigen::VectorXd target(k);
        for (int a = 0; a < k; ++a) {
            target(a) = obs[a].value;
            for (int b = 0; b < k; ++b) sub(a, b) = column_gram(obs[a].col, obs[b].col);
        }
        const RidgeSolution sol = ridge_solve_direct(sub, target, lambda);
        Eigen::MatrixXd cross(d, k);
        for (int j = 0; j < d; ++j) {
            for (int a = 0; a < k; ++a) cross(j, a) = column_gram(j, obs[a].col);
        }
        completed.row(i) = (cross * sol.alpha).transpose();
    }
    return completed;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("unexpected end of solution file");
    return value;
}

} // namespace

void save_solution(const RidgeSolution& solution, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("NTKS", 4);
    write_pod<std::uint32_t>(out, 1);
    write_pod<double>(out, solution.lambda);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(solution.anchors.size()));
    for (int a : solution.anchors) write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(a));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(solution.alpha.size()));
    for (long i = 0; i < solution.alpha.size(); ++i) write_pod<double>(out, solution.alpha(i));
    if (!out) throw IoError("write failed: " + path);
}

RidgeSolution load_solution(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open solution file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NTKS", 4) != 0) throw IoError("bad NTKS magic in " + path);
    if (read_pod<std::uint32_t>(in) != 1) throw IoError("unsupported NTKS version");
    RidgeSolution sol;
    sol.lambda = read_pod<double>(in);
    const auto anchor_count = read_pod<std::uint64_t>(in);
    sol.anchors.resize(anchor_count);
    for (auto& a : sol.anchors) a = static_cast<int>(read_pod<std::uint64_t>(in));
    const auto alpha_count = read_pod<std::uint64_t>(in);
    sol.alpha.resize(static_cast<long>(alpha_count));
    for (long i = 0; i < sol.alpha.size(); ++i) sol.alpha(i) = read_pod<double>(in);
    return sol;
}

} // namespace ntk
