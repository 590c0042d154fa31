#include "gridsight/ids.hpp"

#include <sodium.h>

namespace gridsight {

RawId path_digest(std::string_view utf8_path) {
    static const int init = sodium_init();
    (void)init;
    RawId out{};
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(utf8_path.data()),
                       utf8_path.size(), nullptr, 0);
    return out;
}

std::string to_hex(const RawId& raw) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string hex(raw.size() * 2, '0');
    for (std::size_t i = 0; i < raw.size(); ++i) {
        hex[2 * i] = digits[raw[i] >> 4];
        hex[2 * i + 1] = digits[raw[i] & 0xf];
    }
    return hex;
}

std::optional<RawId> from_hex(std::string_view hex) {
    if (hex.size() != 32) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    RawId out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

}  // namespace gridsight
