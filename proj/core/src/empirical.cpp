#include "ntk/empirical.hpp"

#include <cmath>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/rng.hpp"

namespace ntk {

namespace {

struct BatchState {
    std::vector<FiniteNet::Trace> traces;
    std::vector<FiniteNet::Signals> signals;
};

BatchState evaluate_batch(const FiniteNet& net, const Eigen::MatrixXd& rows) {
    BatchState state;
    const int m = static_cast<int>(rows.rows());
    state.traces.reserve(m);
    state.signals.reserve(m);
    for (int i = 0; i < m; ++i) {
        const Eigen::MatrixXd x = net.input_from_row(rows.row(i).transpose());
        state.traces.push_back(net.forward(x));
        state.signals.push_back(net.backward(state.traces.back()));
    }
    return state;
}

} // namespace

Eigen::MatrixXd empirical_ntk_cross(const FiniteNet& net, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b) {
    const BatchState sa = evaluate_batch(net, a);
    const bool same = &a == &b || (a.rows() == b.rows() && a.cols() == b.cols() && a == b);
    const BatchState sb = same ? BatchState{} : evaluate_batch(net, b);
    const BatchState& rb = same ? sa : sb;

    Eigen::MatrixXd kernel(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const int j0 = same ? i : 0;
        for (int j = j0; j < b.rows(); ++j) {
            kernel(i, j) =
                net.kernel_entry(sa.traces[i], sa.signals[i], rb.traces[j], rb.signals[j]);
            if (same && j > i) kernel(j, i) = kernel(i, j);
        }
    }
    return kernel;
}

GramMatrix empirical_ntk_contraction(const FiniteNet& net, const Eigen::MatrixXd& x) {
    GramMatrix g;
    g.kind = GramKind::Empirical;
    g.fingerprint = arch_fingerprint(net.arch());
    g.entries = empirical_ntk_cross(net, x, x);
    return g;
}

Eigen::VectorXd empirical_ntk_vector_product(const FiniteNet& net, const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& xp, const Eigen::VectorXd& v) {
    if (v.size() != xp.rows()) throw ConfigError("vector length must match the anchor count");
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(net.param_count());
    for (int j = 0; j < xp.rows(); ++j) {
        if (v(j) == 0.0) continue;
        const Eigen::MatrixXd xj = net.input_from_row(xp.row(j).transpose());
        const FiniteNet::Trace trace = net.forward(xj);
        const FiniteNet::Signals sig = net.backward(trace);
        net.accumulate_gradient(trace, sig, v(j), direction);
    }
    Eigen::VectorXd out(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
        out(i) = net.jvp(net.input_from_row(x.row(i).transpose()), direction);
    }
    return out;
}

GramMatrix mc_kernel_estimate(const ArchSpec& arch, Parameterization param, int num_samples,
                              const Eigen::MatrixXd& x, std::uint64_t root_seed,
                              Activation activation) {
    if (num_samples < 1) throw ConfigError("mc_kernel_estimate needs at least one sample");
    GramMatrix g;
    g.kind = GramKind::Empirical;
    g.fingerprint = arch_fingerprint(arch);
    g.entries = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    for (int k = 0; k < num_samples; ++k) {
        FiniteNet net(arch, param, split_seed(root_seed, static_cast<std::uint64_t>(k)),
                      activation);
        g.entries += empirical_ntk_cross(net, x, x);
    }
    g.entries /= static_cast<double>(num_samples);
    return g;
}

double kernel_distance(const Eigen::MatrixXd& h, const Eigen::MatrixXd& hp) {
    if (h.rows() != hp.rows() || h.cols() != hp.cols()) {
        throw ConfigError("kernel_distance: shape mismatch");
    }
    const double nh = h.cwiseProduct(h).sum();
    const double nhp = hp.cwiseProduct(hp).sum();
    if (nh == 0.0 || nhp == 0.0) throw NumericError("kernel_distance: zero gram matrix");
    return 1.0 - h.cwiseProduct(hp).sum() / std::sqrt(nh * nhp);
}

TwoLayerSignNet TwoLayerSignNet::create(int width, int input_dim, std::uint64_t seed) {
    TwoLayerSignNet net;
    net.w.resize(width, input_dim);
    net.a.resize(width);
    NormalSampler normal(seed);
    for (int i = 0; i < width; ++i) {
        for (int j = 0; j < input_dim; ++j) net.w(i, j) = normal();
    }
    for (int i = 0; i < width; ++i) net.a(i) = normal.unit() < 0.5 ? -1.0 : 1.0;
    return net;
}

double TwoLayerSignNet::value(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd pre = w * x;
    double acc = 0.0;
    for (int i = 0; i < width(); ++i) acc += a(i) * std::max(pre(i), 0.0);
    return acc / std::sqrt(static_cast<double>(width()));
}

Eigen::VectorXd TwoLayerSignNet::input_weight_gradient(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd pre = w * x;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(width(), x.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(width()));
    for (int i = 0; i < width(); ++i) {
        if (pre(i) > 0.0) grad.row(i) = scale * a(i) * x.transpose();
    }
    Eigen::VectorXd flat(grad.size());
    long pos = 0;
    for (int i = 0; i < grad.rows(); ++i) {
        for (int j = 0; j < grad.cols(); ++j) flat(pos++) = grad(i, j);
    }
    return flat;
}

GramMatrix activation_pattern_gram(const TwoLayerSignNet& net, const Eigen::MatrixXd& x) {
    const int m = static_cast<int>(x.rows());
    const int n = net.width();
    Eigen::MatrixXd patterns(n, m); // [w_i^T x_k > 0]
    for (int k = 0; k < m; ++k) {
        const Eigen::VectorXd pre = net.w * x.row(k).transpose();
        for (int i = 0; i < n; ++i) patterns(i, k) = pre(i) > 0.0 ? 1.0 : 0.0;
    }
    GramMatrix g;
    g.kind = GramKind::Empirical;
    g.fingerprint = 0;
    g.entries.resize(m, m);
    for (int k = 0; k < m; ++k) {
        for (int l = k; l < m; ++l) {
            const double shared = patterns.col(k).dot(patterns.col(l));
            const double value = shared / n * x.row(k).dot(x.row(l));
            g.entries(k, l) = value;
            g.entries(l, k) = value;
        }
    }
    return g;
}

} // namespace ntk
