#include "ntk/spectral.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "ntk/errors.hpp"
#include "ntk/rng.hpp"

namespace ntk {

double ZonalSpectrum::reconstruct(double theta) const {
    double value = lambdas[0] / (4.0 * M_PI * M_PI);
    for (int k = 1; k <= k_max(); ++k) {
        value += lambdas[k] * std::cos(k * theta) / (M_PI * M_PI);
    }
    return value;
}

ZonalSpectrum zonal_spectrum(const std::function<double(double)>& kernel_of_cosine, int k_max,
                             int quadrature_n) {
    if (k_max < 0) throw ConfigError("k_max must be nonnegative");
    if (quadrature_n < 4 * std::max(k_max, 1)) {
        throw ConfigError("quadrature resolution must be at least 4 k_max");
    }
    if ((quadrature_n & (quadrature_n - 1)) != 0) {
        throw ConfigError("quadrature resolution must be a power of two");
    }

    std::vector<double> values(quadrature_n);
    for (int j = 0; j < quadrature_n; ++j) {
        const double theta = 2.0 * M_PI * j / quadrature_n;
        values[j] = kernel_of_cosine(std::cos(theta));
        if (!std::isfinite(values[j])) throw NumericError("kernel value is not finite");
    }

    ZonalSpectrum spectrum;
    spectrum.quadrature_n = quadrature_n;
    spectrum.lambdas.assign(k_max + 1, 0.0);
    double c0 = 0.0;
    for (double v : values) c0 += v;
    c0 /= quadrature_n;
    spectrum.lambdas[0] = 4.0 * M_PI * M_PI * c0;
    for (int k = 1; k <= k_max; ++k) {
        double a = 0.0;
        for (int j = 0; j < quadrature_n; ++j) {
            a += values[j] * std::cos(2.0 * M_PI * k * j / quadrature_n);
        }
        a *= 2.0 / quadrature_n;
        spectrum.lambdas[k] = M_PI * M_PI * a;
    }
    return spectrum;
}

PowerLawFit powerlaw_fit(const ZonalSpectrum& spectrum, int k_lo, int k_hi) {
    if (k_lo < 1 || k_hi <= k_lo || k_hi > spectrum.k_max()) {
        throw ConfigError("powerlaw fit range is invalid");
    }
    std::vector<double> ks, ls;
    for (int k = k_lo; k <= k_hi; ++k) {
        if (spectrum.lambdas[k] <= 0.0) {
            throw NumericError("powerlaw fit requires positive eigenvalues in range");
        }
        ks.push_back(static_cast<double>(k));
        ls.push_back(spectrum.lambdas[k]);
    }
    const LogLogFit fit = loglog_fit(ks, ls);
    return {-fit.slope, 1.96 * fit.slope_stderr};
}

FourierEmbedding FourierEmbedding::basic(int input_dim) {
    FourierEmbedding e;
    e.kind = EmbeddingKind::Basic;
    e.input_dim = input_dim;
    return e;
}

FourierEmbedding FourierEmbedding::positional(int input_dim, int m, double sigma) {
    if (m < 1 || sigma <= 0.0) throw ConfigError("positional embedding needs m >= 1, sigma > 0");
    FourierEmbedding e;
    e.kind = EmbeddingKind::Positional;
    e.input_dim = input_dim;
    e.num_frequencies = m;
    e.sigma = sigma;
    return e;
}

FourierEmbedding FourierEmbedding::gaussian(int input_dim, int m, double sigma,
                                            std::uint64_t seed) {
    if (m < 1 || sigma < 0.0) throw ConfigError("gaussian embedding needs m >= 1, sigma >= 0");
    FourierEmbedding e;
    e.kind = EmbeddingKind::Gaussian;
    e.input_dim = input_dim;
    e.num_frequencies = m;
    e.sigma = sigma;
    e.seed = seed;
    e.b.resize(m, input_dim);
    NormalSampler normal(seed);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < input_dim; ++j) e.b(i, j) = sigma * normal();
    }
    return e;
}

int FourierEmbedding::output_dim() const {
    switch (kind) {
        case EmbeddingKind::Basic: return 2 * input_dim;
        case EmbeddingKind::Positional: return 2 * input_dim * num_frequencies;
        case EmbeddingKind::Gaussian: return 2 * num_frequencies;
    }
    return 0;
}

Eigen::VectorXd fourier_embed(const Eigen::VectorXd& x, const FourierEmbedding& embedding) {
    if (x.size() != embedding.input_dim) throw ConfigError("embedding input dimension mismatch");
    Eigen::VectorXd out(embedding.output_dim());
    switch (embedding.kind) {
        case EmbeddingKind::Basic: {
            for (int i = 0; i < x.size(); ++i) {
                out(i) = std::cos(2.0 * M_PI * x(i));
                out(x.size() + i) = std::sin(2.0 * M_PI * x(i));
            }
            break;
        }
        case EmbeddingKind::Positional: {
            const int m = embedding.num_frequencies;
            int pos = 0;
            const int half = embedding.input_dim * m;
            for (int i = 0; i < x.size(); ++i) {
                for (int j = 0; j < m; ++j) {
                    const double freq =
                        std::pow(embedding.sigma, static_cast<double>(j) / m);
                    out(pos) = std::cos(2.0 * M_PI * freq * x(i));
                    out(half + pos) = std::sin(2.0 * M_PI * freq * x(i));
                    ++pos;
                }
            }
            break;
        }
        case EmbeddingKind::Gaussian: {
            const Eigen::VectorXd proj = 2.0 * M_PI * (embedding.b * x);
            for (int i = 0; i < proj.size(); ++i) {
                out(i) = std::cos(proj(i));
                out(proj.size() + i) = std::sin(proj(i));
            }
            break;
        }
    }
    return out;
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
    if (!in) throw IoError("unexpected end of embedding file");
    return value;
}

} // namespace

void save_embedding(const FourierEmbedding& embedding, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("NTKF", 4);
    write_pod<std::uint32_t>(out, 1);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(embedding.kind));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(embedding.input_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(embedding.num_frequencies));
    write_pod<double>(out, embedding.sigma);
    write_pod<std::uint64_t>(out, embedding.seed);
    if (embedding.kind == EmbeddingKind::Gaussian) {
        for (int i = 0; i < embedding.b.rows(); ++i) {
            for (int j = 0; j < embedding.b.cols(); ++j) write_pod<double>(out, embedding.b(i, j));
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

FourierEmbedding load_embedding(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NTKF", 4) != 0) throw IoError("bad NTKF magic in " + path);
    if (read_pod<std::uint32_t>(in) != 1) throw IoError("unsupported NTKF version");
    FourierEmbedding e;
    e.kind = static_cast<EmbeddingKind>(read_pod<std::uint8_t>(in));
    e.input_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    e.num_frequencies = static_cast<int>(read_pod<std::uint32_t>(in));
    e.sigma = read_pod<double>(in);
    e.seed = read_pod<std::uint64_t>(in);
    if (e.kind == EmbeddingKind::Gaussian) {
        e.b.resize(e.num_frequencies, e.input_dim);
        for (int i = 0; i < e.b.rows(); ++i) {
            for (int j = 0; j < e.b.cols(); ++j) e.b(i, j) = read_pod<double>(in);
        }
    }
    return e;
}

ZonalSpectrum frequency_shift_spectrum(const ZonalSpectrum& base, int b) {
    if (b < 1) throw ConfigError("shift factor must be >= 1");
    ZonalSpectrum out;
    out.quadrature_n = base.quadrature_n;
    out.lambdas.assign(static_cast<std::size_t>(base.k_max()) * b + 1, 0.0);
    out.lambdas[0] = base.lambdas[0];
    for (int k = 1; k <= base.k_max(); ++k) {
        out.lambdas[static_cast<std::size_t>(k) * b] = base.lambdas[k];
    }
    return out;
}

MercerCheckResult mercer_eigvec_check(const std::function<double(double)>& kernel_of_cosine,
                                      int m, const std::function<double(double)>& eigenfunction,
                                      double reference_lambda, std::uint64_t seed) {
    if (m < 1) throw ConfigError("mercer check needs m >= 1");
    NormalSampler rng(seed);
    std::vector<double> angles(m);
    for (int i = 0; i < m; ++i) angles[i] = 2.0 * M_PI * rng.unit();

    Eigen::VectorXd psi(m);
    for (int i = 0; i < m; ++i) psi(i) = eigenfunction(angles[i]);

    double form = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            form += psi(i) * kernel_of_cosine(std::cos(angles[i] - angles[j])) * psi(j);
        }
    }
    form /= static_cast<double>(m) * m;

    MercerCheckResult result;
    result.quadratic_form = form;
    result.reference = reference_lambda;
    result.residual = std::abs(form - reference_lambda);
    return result;
}

double time_to_learn(double lambda, double epsilon) {
    if (lambda <= 0.0) throw NumericError("time_to_learn requires lambda > 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    return std::log(1.0 / epsilon) / lambda;
}

} // namespace ntk
