#include "ntk/arch.hpp"

#include "ntk/errors.hpp"

namespace ntk {

void ArchSpec::validate() const {
    if (depth < 1) throw ConfigError("architecture depth must be >= 1");
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (kind == LayerKind::Conv1d) {
        if (pixels < 1) throw ConfigError("conv architecture needs pixels >= 1");
        if (kernel_offsets.empty()) throw ConfigError("conv kernel offsets must be nonempty");
    }
    for (int w : widths) {
        if (w < 1) throw ConfigError("hidden widths must be >= 1");
    }
    if (!widths.empty() && static_cast<int>(widths.size()) != depth - 1) {
        throw ConfigError("expected depth-1 hidden widths");
    }
}

ArchSpec ArchSpec::dense(int depth, int input_dim, std::vector<int> widths) {
    ArchSpec a;
    a.kind = LayerKind::Dense;
    a.depth = depth;
    a.input_dim = input_dim;
    a.pixels = 1;
    a.readout = Readout::Linear;
    a.widths = std::move(widths);
    a.validate();
    return a;
}

ArchSpec ArchSpec::conv1d(int depth, int channels, int pixels, std::vector<int> offsets,
                          std::vector<int> widths, Padding padding) {
    ArchSpec a;
    a.kind = LayerKind::Conv1d;
    a.depth = depth;
    a.input_dim = channels;
    a.pixels = pixels;
    a.kernel_offsets = std::move(offsets);
    a.readout = Readout::AvgPool;
    a.padding = padding;
    a.widths = std::move(widths);
    a.validate();
    return a;
}

std::uint64_t arch_fingerprint(const ArchSpec& arch) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001B3ULL;
    };
    mix(static_cast<std::uint64_t>(arch.kind));
    mix(static_cast<std::uint64_t>(arch.depth));
    mix(static_cast<std::uint64_t>(arch.input_dim));
    mix(static_cast<std::uint64_t>(arch.pixels));
    mix(static_cast<std::uint64_t>(arch.readout));
    mix(static_cast<std::uint64_t>(arch.padding));
    for (int r : arch.kernel_offsets) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(r)));
    for (int w : arch.widths) mix(static_cast<std::uint64_t>(w));
    return h;
}

std::string to_string(LayerKind k) {
    return k == LayerKind::Dense ? "fc" : "conv1d";
}

} // namespace ntk
