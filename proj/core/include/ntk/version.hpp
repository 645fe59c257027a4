#pragma once

#include <cstdint>
#include <string>

namespace ntk {

inline constexpr const char* kVersion = "0.1.0";

/// Short hex fingerprint of a module at the current version; stamped on
/// numeric output rows so artifacts can be traced to their producer.
inline std::string module_fingerprint(const std::string& module_name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : module_name + "@" + kVersion) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", static_cast<std::uint32_t>(h));
    return std::string(buf);
}

} // namespace ntk
