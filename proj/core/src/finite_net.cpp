#include "ntk/finite_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"
#include "ntk/rng.hpp"

namespace ntk {

namespace {

int wrap_index(int p, int d) {
    int q = p % d;
    return q < 0 ? q + d : q;
}

} // namespace

FiniteNet::FiniteNet(ArchSpec arch, Parameterization param, std::uint64_t seed,
                     Activation activation, double softplus_beta)
    : arch_(std::move(arch)), param_(param), seed_(seed), activation_(activation),
      beta_(softplus_beta) {
    arch_.validate();
    if (arch_.widths.empty() && arch_.depth > 1) {
        throw ConfigError("finite net needs hidden widths");
    }
    pixels_ = arch_.is_conv() ? arch_.pixels : 1;
    if (!arch_.is_conv()) {
        arch_.kernel_offsets = {0};
        arch_.pixels = 1;
    }

    layer_widths_.resize(arch_.depth + 1);
    layer_widths_[0] = arch_.input_dim;
    for (int l = 1; l < arch_.depth; ++l) layer_widths_[l] = arch_.widths[l - 1];
    layer_widths_[arch_.depth] = 1;

    forward_scale_.resize(arch_.depth + 1, 1.0);
    weights_.resize(arch_.depth);
    NormalSampler normal(seed_);
    for (int l = 1; l <= arch_.depth; ++l) {
        // Dense first layer is unscaled so q_1 = x.x'; conv first layer keeps
        // the channel normalization of the analytic recursion.
        const bool scaled = arch_.is_conv() || l > 1;
        const double fan = static_cast<double>(layer_widths_[l - 1]);
        const double factor = scaled ? 1.0 / std::sqrt(fan) : 1.0;
        const double init_std = param_ == Parameterization::NTK ? 1.0 : factor;
        forward_scale_[l] = param_ == Parameterization::NTK ? factor : 1.0;
        weights_[l - 1].resize(arch_.kernel_offsets.size());
        for (auto& w : weights_[l - 1]) {
            w.resize(layer_widths_[l], layer_widths_[l - 1]);
            for (int i = 0; i < w.rows(); ++i) {
                for (int j = 0; j < w.cols(); ++j) w(i, j) = init_std * normal();
            }
            param_count_ += w.size();
        }
    }
}

double FiniteNet::act(double z) const {
    switch (activation_) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Softplus:
            // Stable softplus with sharpness beta.
            return z > 0.0 ? z + std::log1p(std::exp(-beta_ * z)) / beta_
                           : std::log1p(std::exp(beta_ * z)) / beta_;
        case Activation::Identity: return z;
    }
    return z;
}

double FiniteNet::act_deriv(double z) const {
    switch (activation_) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0; // derivative at 0 is 0
        case Activation::Softplus: return 1.0 / (1.0 + std::exp(-beta_ * z));
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

Eigen::MatrixXd FiniteNet::input_from_row(const Eigen::VectorXd& row) const {
    const int n0 = layer_widths_[0];
    const int d = pixels_;
    if (row.size() != static_cast<long>(n0) * d) throw ConfigError("input row has wrong length");
    Eigen::MatrixXd x(n0, d);
    for (int s = 0; s < d; ++s) {
        for (int j = 0; j < n0; ++j) x(j, s) = row(s * n0 + j);
    }
    return x;
}

Eigen::MatrixXd FiniteNet::shifted_columns(const Eigen::MatrixXd& x, int offset) const {
    const int d = static_cast<int>(x.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), d);
    for (int s = 0; s < d; ++s) {
        const int p = s + offset;
        if (p >= 0 && p < d) {
            out.col(s) = x.col(p);
        } else if (arch_.padding == Padding::Circular) {
            out.col(s) = x.col(wrap_index(p, d));
        }
    }
    return out;
}

FiniteNet::Trace FiniteNet::forward(const Eigen::MatrixXd& x) const {
    if (x.rows() != layer_widths_[0] || x.cols() != pixels_) {
        throw ConfigError("forward: input shape mismatch");
    }
    Trace trace;
    trace.inputs.reserve(arch_.depth);
    trace.preacts.reserve(arch_.depth);
    Eigen::MatrixXd cur = x;
    for (int l = 1; l <= arch_.depth; ++l) {
        trace.inputs.push_back(cur);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(layer_widths_[l], pixels_);
        for (std::size_t k = 0; k < arch_.kernel_offsets.size(); ++k) {
            h.noalias() += weights_[l - 1][k] * shifted_columns(cur, arch_.kernel_offsets[k]);
        }
        h *= forward_scale_[l];
        flops::add(static_cast<std::uint64_t>(2) * layer_widths_[l] * layer_widths_[l - 1] *
                   pixels_ * arch_.kernel_offsets.size());
        trace.preacts.push_back(h);
        if (l < arch_.depth) {
            cur = h.unaryExpr([this](double z) { return act(z); });
        }
    }
    trace.output = trace.preacts.back().sum() / pixels_;
    return trace;
}

double FiniteNet::value(const Eigen::MatrixXd& x) const { return forward(x).output; }

FiniteNet::Signals FiniteNet::backward(const Trace& trace) const {
    Signals sig;
    sig.deltas.resize(arch_.depth);
    sig.deltas[arch_.depth - 1] =
        Eigen::MatrixXd::Constant(1, pixels_, 1.0 / static_cast<double>(pixels_));
    for (int l = arch_.depth - 1; l >= 1; --l) {
        const Eigen::MatrixXd& delta_up = sig.deltas[l];
        Eigen::MatrixXd back = Eigen::MatrixXd::Zero(layer_widths_[l], pixels_);
        for (std::size_t k = 0; k < arch_.kernel_offsets.size(); ++k) {
            // delta_{l}^{j,p} collects delta_{l+1}^{i,p-r} W^{ijr}.
            back.noalias() += weights_[l][k].transpose() *
                              shifted_columns(delta_up, -arch_.kernel_offsets[k]);
        }
        back *= forward_scale_[l + 1];
        sig.deltas[l - 1] = back.cwiseProduct(
            trace.preacts[l - 1].unaryExpr([this](double z) { return act_deriv(z); }));
        flops::add(static_cast<std::uint64_t>(2) * layer_widths_[l + 1] * layer_widths_[l] *
                   pixels_ * arch_.kernel_offsets.size());
    }
    return sig;
}

void FiniteNet::accumulate_gradient(const Trace& trace, const Signals& signals, double alpha,
                                    Eigen::VectorXd& flat) const {
    if (flat.size() != param_count_) throw ConfigError("gradient buffer has wrong size");
    long pos = 0;
    for (int l = 1; l <= arch_.depth; ++l) {
        for (std::size_t k = 0; k < arch_.kernel_offsets.size(); ++k) {
            const Eigen::MatrixXd shifted =
                shifted_columns(trace.inputs[l - 1], arch_.kernel_offsets[k]);
            const Eigen::MatrixXd grad =
                forward_scale_[l] * signals.deltas[l - 1] * shifted.transpose();
            Eigen::Map<Eigen::VectorXd>(flat.data() + pos, grad.size()) +=
                alpha * Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
            pos += grad.size();
        }
    }
}

Eigen::VectorXd FiniteNet::gradient(const Eigen::MatrixXd& x) const {
    const Trace trace = forward(x);
    const Signals sig = backward(trace);
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(param_count_);
    accumulate_gradient(trace, sig, 1.0, flat);
    return flat;
}

double FiniteNet::jvp(const Eigen::MatrixXd& x, const Eigen::VectorXd& direction) const {
    if (direction.size() != param_count_) throw ConfigError("jvp direction has wrong size");
    Eigen::MatrixXd cur = x;
    Eigen::MatrixXd cur_dot = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    long pos = 0;
    Eigen::MatrixXd h, h_dot;
    for (int l = 1; l <= arch_.depth; ++l) {
        h = Eigen::MatrixXd::Zero(layer_widths_[l], pixels_);
        h_dot = Eigen::MatrixXd::Zero(layer_widths_[l], pixels_);
        for (std::size_t k = 0; k < arch_.kernel_offsets.size(); ++k) {
            const Eigen::MatrixXd& w = weights_[l - 1][k];
            Eigen::Map<const Eigen::MatrixXd> w_dot(direction.data() + pos, w.rows(), w.cols());
            pos += w.size();
            const Eigen::MatrixXd shifted = shifted_columns(cur, arch_.kernel_offsets[k]);
            const Eigen::MatrixXd shifted_dot = shifted_columns(cur_dot, arch_.kernel_offsets[k]);
            h.noalias() += w * shifted;
            h_dot.noalias() += w_dot * shifted + w * shifted_dot;
        }
        h *= forward_scale_[l];
        h_dot *= forward_scale_[l];
        if (l < arch_.depth) {
            cur = h.unaryExpr([this](double z) { return act(z); });
            cur_dot = h_dot.cwiseProduct(h.unaryExpr([this](double z) { return act_deriv(z); }));
        }
    }
    return h_dot.sum() / pixels_;
}

Eigen::VectorXd FiniteNet::params() const {
    Eigen::VectorXd flat(param_count_);
    long pos = 0;
    for (const auto& layer : weights_) {
        for (const auto& w : layer) {
            Eigen::Map<Eigen::VectorXd>(flat.data() + pos, w.size()) =
                Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
            pos += w.size();
        }
    }
    return flat;
}

void FiniteNet::set_params(const Eigen::VectorXd& flat) {
    if (flat.size() != param_count_) throw ConfigError("parameter vector has wrong size");
    long pos = 0;
    for (auto& layer : weights_) {
        for (auto& w : layer) {
            Eigen::Map<const Eigen::VectorXd> chunk(flat.data() + pos, w.size());
            Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = chunk;
            pos += w.size();
        }
    }
}

void FiniteNet::add_scaled(const Eigen::VectorXd& flat_update, double alpha) {
    if (flat_update.size() != param_count_) throw ConfigError("update vector has wrong size");
    long pos = 0;
    for (auto& layer : weights_) {
        for (auto& w : layer) {
            Eigen::Map<const Eigen::VectorXd> chunk(flat_update.data() + pos, w.size());
            Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) += alpha * chunk;
            pos += w.size();
        }
    }
}

double FiniteNet::kernel_entry(const Trace& ta, const Signals& sa, const Trace& tb,
                               const Signals& sb) const {
    double total = 0.0;
    for (int l = 1; l <= arch_.depth; ++l) {
        const double s2 = forward_scale_[l] * forward_scale_[l];
        // <grad_W f(a), grad_W f(b)> factorizes into channel contractions of
        // the backward signals and the (offset-shifted) layer inputs.
        const Eigen::MatrixXd d_ab = sa.deltas[l - 1].transpose() * sb.deltas[l - 1]; // d x d
        Eigen::MatrixXd x_ab = Eigen::MatrixXd::Zero(pixels_, pixels_);
        for (int r : arch_.kernel_offsets) {
            x_ab.noalias() += shifted_columns(ta.inputs[l - 1], r).transpose() *
                              shifted_columns(tb.inputs[l - 1], r);
        }
        total += s2 * d_ab.cwiseProduct(x_ab).sum();
        flops::add(static_cast<std::uint64_t>(2) * pixels_ * pixels_ *
                   (layer_widths_[l] + layer_widths_[l - 1] * arch_.kernel_offsets.size()));
    }
    return total;
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
    if (!in) throw IoError("unexpected end of checkpoint file");
    return value;
}

} // namespace

void save_checkpoint(const FiniteNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("NTKW", 4);
    write_pod<std::uint32_t>(out, 1);
    write_pod<std::uint64_t>(out, arch_fingerprint(net.arch()));
    const Eigen::VectorXd flat = net.params();
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(flat.size()));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

void load_checkpoint(FiniteNet& net, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NTKW", 4) != 0) throw IoError("bad NTKW magic in " + path);
    if (read_pod<std::uint32_t>(in) != 1) throw IoError("unsupported NTKW version");
    const auto fp = read_pod<std::uint64_t>(in);
    if (fp != arch_fingerprint(net.arch())) {
        throw ConfigError("checkpoint architecture fingerprint does not match");
    }
    const auto count = read_pod<std::uint64_t>(in);
    if (count != static_cast<std::uint64_t>(net.param_count())) {
        throw ConfigError("checkpoint parameter count does not match");
    }
    Eigen::VectorXd flat(static_cast<long>(count));
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint: " + path);
    net.set_params(flat);
}

} // namespace ntk
