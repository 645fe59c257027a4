#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "ntk/fit.hpp"

namespace ntk {

/// Cosine-series Mercer spectrum of a zonal kernel on the circle:
/// K(cos t) = lambda_0 / (4 pi^2) + (1/pi^2) sum_k lambda_k cos(k t).
struct ZonalSpectrum {
    std::vector<double> lambdas; // index 0..K_max
    int quadrature_n = 0;

    int k_max() const { return static_cast<int>(lambdas.size()) - 1; }
    double reconstruct(double theta) const;
};

/// Inverts the circle decomposition by uniform-grid cosine quadrature, which
/// is exact for kernels band-limited below N/2. Requires N >= 4 K_max and N a
/// power of two.
ZonalSpectrum zonal_spectrum(const std::function<double(double)>& kernel_of_cosine, int k_max,
                             int quadrature_n);

struct PowerLawFit {
    double exponent = 0.0;  // p in lambda_k ~ k^{-p}
    double ci_halfwidth = 0.0;
};

/// Least-squares log-log fit of lambda_k over k in [k_lo, k_hi].
PowerLawFit powerlaw_fit(const ZonalSpectrum& spectrum, int k_lo, int k_hi);

enum class EmbeddingKind : std::uint8_t { Basic = 0, Positional = 1, Gaussian = 2 };

/// Translation-invariant input embeddings: basic [cos 2pi x, sin 2pi x],
/// positional with the sigma^{j/M} frequency ladder (j = 0..M-1), and random
/// Gaussian projections with B frozen per seed.
struct FourierEmbedding {
    EmbeddingKind kind = EmbeddingKind::Basic;
    int input_dim = 1;
    int num_frequencies = 1; // M; unused for basic
    double sigma = 1.0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd b; // Gaussian projection rows, sampled at construction

    static FourierEmbedding basic(int input_dim);
    static FourierEmbedding positional(int input_dim, int m, double sigma);
    static FourierEmbedding gaussian(int input_dim, int m, double sigma, std::uint64_t seed);

    int output_dim() const;
};

Eigen::VectorXd fourier_embed(const Eigen::VectorXd& x, const FourierEmbedding& embedding);

/// Embedding file: "NTKF" magic, u32 version, u8 kind, dims, then the frozen
/// projection (gaussian) or nothing.
void save_embedding(const FourierEmbedding& embedding, const std::string& path);
FourierEmbedding load_embedding(const std::string& path);

/// Frequency scaling by integer b: lambda'_{k b} = lambda_k, zero elsewhere.
ZonalSpectrum frequency_shift_spectrum(const ZonalSpectrum& base, int b);

struct MercerCheckResult {
    double quadratic_form = 0.0; // (1/m^2) psi^T K psi on the sample
    double reference = 0.0;
    double residual = 0.0;
};

/// Law-of-large-numbers check of a circle eigenpair: samples m angles
/// uniformly, forms the Gram of kernel_of_cosine, and compares the quadratic
/// form of the reference eigenfunction against the reference eigenvalue.
MercerCheckResult mercer_eigvec_check(const std::function<double(double)>& kernel_of_cosine,
                                      int m, const std::function<double(double)>& eigenfunction,
                                      double reference_lambda, std::uint64_t seed);

/// t_k = ln(1/eps) / lambda_k: time to shrink a mode residual by eps.
double time_to_learn(double lambda, double epsilon);

} // namespace ntk
