#include "ntk/gram.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

#include "ntk/conv_kernel.hpp"
#include "ntk/errors.hpp"
#include "ntk/fc_kernel.hpp"

static_assert(std::endian::native == std::endian::little,
              "NTKG serialization assumes a little-endian host");

namespace ntk {

std::string to_string(GramKind k) {
    switch (k) {
        case GramKind::NTK: return "ntk";
        case GramKind::NNGP: return "nngp";
        case GramKind::Empirical: return "empirical";
        case GramKind::NTH: return "nth";
    }
    return "?";
}

GramKind gram_kind_from_string(const std::string& s) {
    if (s == "ntk") return GramKind::NTK;
    if (s == "nngp") return GramKind::NNGP;
    if (s == "empirical") return GramKind::Empirical;
    if (s == "nth") return GramKind::NTH;
    throw ConfigError("unknown gram kind: " + s);
}

void GramMatrix::validate() const {
    const int n = m();
    if (entries.cols() != n) throw NumericError("gram matrix is not square");
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (entries(i, j) != entries(j, i)) {
                throw NumericError("gram matrix is not exactly symmetric");
            }
        }
    }
    if (n == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries,
                                                      Eigen::EigenvaluesOnly);
    const double floor = -1e-8 * entries.trace() / n;
    if (es.eigenvalues().minCoeff() < floor) {
        throw NumericError("gram matrix has an eigenvalue below the PSD tolerance");
    }
}

Eigen::MatrixXd conv_input_from_row(const Eigen::VectorXd& row, const ArchSpec& arch) {
    const int n0 = arch.input_dim;
    const int d = arch.pixels;
    if (row.size() != static_cast<long>(n0) * d) {
        throw ConfigError("conv input row has wrong length");
    }
    Eigen::MatrixXd x(n0, d);
    for (int s = 0; s < d; ++s) {
        for (int j = 0; j < n0; ++j) x(j, s) = row(s * n0 + j);
    }
    return x;
}

namespace {

double pair_kernel(const Eigen::MatrixXd& dataset, const ArchSpec& arch, GramKind kind, int i,
                   int j) {
    if (arch.is_conv()) {
        const Eigen::MatrixXd xi = conv_input_from_row(dataset.row(i).transpose(), arch);
        const Eigen::MatrixXd xj = conv_input_from_row(dataset.row(j).transpose(), arch);
        const ConvKernelValue v = conv1d_ntk_with_pool(xi, xj, arch);
        return kind == GramKind::NTK ? v.theta : v.nngp;
    }
    const Eigen::VectorXd xi = dataset.row(i).transpose();
    const Eigen::VectorXd xj = dataset.row(j).transpose();
    const FcKernelValue v = fc_ntk(std::span<const double>(xi.data(), xi.size()),
                                   std::span<const double>(xj.data(), xj.size()), arch.depth);
    return kind == GramKind::NTK ? v.theta : v.nngp;
}

} // namespace

GramMatrix gram(const Eigen::MatrixXd& dataset, const ArchSpec& arch, GramKind kind,
                const GramOptions& options) {
    arch.validate();
    if (kind != GramKind::NTK && kind != GramKind::NNGP) {
        throw ConfigError("analytic gram supports kinds ntk and nngp");
    }
    const int m = static_cast<int>(dataset.rows());
    if (m < 1) throw ConfigError("gram needs at least one sample");
    const int expected_cols = arch.is_conv() ? arch.input_dim * arch.pixels : arch.input_dim;
    if (dataset.cols() != expected_cols) {
        throw ConfigError("dataset feature count does not match architecture");
    }
    const double bytes = 8.0 * m * m;
    if (bytes > options.mem_budget_mb * 1024.0 * 1024.0) {
        throw BudgetError("gram matrix would exceed the memory budget");
    }

    GramMatrix g;
    g.kind = kind;
    g.fingerprint = arch_fingerprint(arch);
    g.entries.resize(m, m);

    const int tile = std::max(options.tile, 1);
    struct Tile {
        int i0, j0;
    };
    std::vector<Tile> tiles;
    for (int i0 = 0; i0 < m; i0 += tile) {
        for (int j0 = i0; j0 < m; j0 += tile) tiles.push_back({i0, j0});
    }

    auto run_tile = [&](const Tile& t) {
        const int i1 = std::min(t.i0 + tile, m);
        const int j1 = std::min(t.j0 + tile, m);
        for (int i = t.i0; i < i1; ++i) {
            for (int j = std::max(i, t.j0); j < j1; ++j) {
                g.entries(i, j) = pair_kernel(dataset, arch, kind, i, j);
            }
        }
    };

    int threads = options.threads > 0 ? options.threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(tiles.size())));
    if (threads == 1) {
        for (const Tile& t : tiles) run_tile(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < tiles.size(); k = next.fetch_add(1)) {
                    run_tile(tiles[k]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < i; ++j) g.entries(i, j) = g.entries(j, i);
    }
    return g;
}

Eigen::VectorXd kernel_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& dataset,
                           const ArchSpec& arch, GramKind kind) {
    const int m = static_cast<int>(dataset.rows());
    Eigen::VectorXd row(m);
    Eigen::MatrixXd probe(1, x.size());
    probe.row(0) = x.transpose();
    for (int j = 0; j < m; ++j) {
        Eigen::MatrixXd two(2, x.size());
        two.row(0) = x.transpose();
        two.row(1) = dataset.row(j);
        row(j) = pair_kernel(two, arch, kind, 0, 1);
    }
    return row;
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
    if (!in) throw IoError("unexpected end of gram file");
    return value;
}

} // namespace

void save_gram(const GramMatrix& gram, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("NTKG", 4);
    write_pod<std::uint32_t>(out, 1);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(gram.kind));
    const std::uint64_t m = static_cast<std::uint64_t>(gram.m());
    write_pod<std::uint64_t>(out, m);
    for (std::uint64_t i = 0; i < m; ++i) {
        for (std::uint64_t j = i; j < m; ++j) {
            write_pod<double>(out, gram.entries(static_cast<int>(i), static_cast<int>(j)));
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

GramMatrix load_gram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open gram file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NTKG", 4) != 0) throw IoError("bad NTKG magic in " + path);
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1) throw IoError("unsupported NTKG version");
    const auto kind = read_pod<std::uint8_t>(in);
    if (kind > 3) throw IoError("bad NTKG kind byte");
    const auto m = read_pod<std::uint64_t>(in);
    GramMatrix g;
    g.kind = static_cast<GramKind>(kind);
    g.entries.resize(static_cast<int>(m), static_cast<int>(m));
    for (std::uint64_t i = 0; i < m; ++i) {
        for (std::uint64_t j = i; j < m; ++j) {
            const double v = read_pod<double>(in);
            g.entries(static_cast<int>(i), static_cast<int>(j)) = v;
            g.entries(static_cast<int>(j), static_cast<int>(i)) = v;
        }
    }
    return g;
}

} // namespace ntk
