#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ntk {

enum class LayerKind : std::uint8_t { Dense = 0, Conv1d = 1 };
enum class Readout : std::uint8_t { Linear = 0, AvgPool = 1 };
enum class Padding : std::uint8_t { Circular = 0, Zero = 1 };
enum class Parameterization : std::uint8_t { NTK = 0, Standard = 1 };

/// Declarative architecture description shared by the analytic and the
/// finite-width paths. All layers are ReLU and bias-free; conv nets read out
/// through average pooling, dense nets through the last linear map.
struct ArchSpec {
    LayerKind kind = LayerKind::Dense;
    int depth = 1;     // number of weight layers L >= 1
    int input_dim = 1; // channels n0
    int pixels = 1;    // d, conv only
    std::vector<int> kernel_offsets = {0};
    Readout readout = Readout::Linear;
    Padding padding = Padding::Circular;
    // Hidden widths n_1..n_{L-1} for the finite-width engine; the analytic
    // limit ignores them. Empty means "analytic only".
    std::vector<int> widths;

    void validate() const;
    bool is_conv() const { return kind == LayerKind::Conv1d; }

    static ArchSpec dense(int depth, int input_dim, std::vector<int> widths = {});
    static ArchSpec conv1d(int depth, int channels, int pixels, std::vector<int> offsets,
                           std::vector<int> widths = {}, Padding padding = Padding::Circular);
};

/// Stable hash of the architecture, recorded in Gram metadata and checkpoints.
std::uint64_t arch_fingerprint(const ArchSpec& arch);

std::string to_string(LayerKind k);

} // namespace ntk
