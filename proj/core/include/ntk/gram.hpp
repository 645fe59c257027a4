#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "ntk/arch.hpp"

namespace ntk {

enum class GramKind : std::uint8_t { NTK = 0, NNGP = 1, Empirical = 2, NTH = 3 };

std::string to_string(GramKind k);
GramKind gram_kind_from_string(const std::string& s);

/// Symmetric positive-semidefinite kernel Gram matrix with provenance.
struct GramMatrix {
    GramKind kind = GramKind::NTK;
    std::uint64_t fingerprint = 0; // producing architecture
    Eigen::MatrixXd entries;

    int m() const { return static_cast<int>(entries.rows()); }

    /// Checks exact symmetry and min eigenvalue >= -1e-8 * trace / m.
    void validate() const;
};

struct GramOptions {
    int tile = 64;          // upper-triangular tile edge, in pairs
    int threads = 0;        // 0 = hardware concurrency
    double mem_budget_mb = 4096.0;
};

/// Tiled assembly of the pairwise limit kernel over a dataset (one sample per
/// row; conv rows are channel-major within pixel). Only the upper triangle is
/// computed; the mirror copy makes symmetry exact. Tiles may run concurrently
/// and each entry is computed exactly once, so results do not depend on the
/// schedule.
GramMatrix gram(const Eigen::MatrixXd& dataset, const ArchSpec& arch, GramKind kind,
                const GramOptions& options = {});

/// Kernel row Theta(x, dataset) for a single probe input.
Eigen::VectorXd kernel_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& dataset,
                           const ArchSpec& arch, GramKind kind);

/// Reshapes one dataset row into the channels x pixels matrix a conv
/// architecture consumes.
Eigen::MatrixXd conv_input_from_row(const Eigen::VectorXd& row, const ArchSpec& arch);

// "NTKG" container: magic, u32 version, u8 kind, u64 m, upper triangle
// row-major as little-endian f64.
void save_gram(const GramMatrix& gram, const std::string& path);
GramMatrix load_gram(const std::string& path);

} // namespace ntk
