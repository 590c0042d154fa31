#ifndef GRIDSIGHT_IDS_HPP
#define GRIDSIGHT_IDS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gridsight {

/// 128-bit BLAKE2b digest of a UTF-8 path.
using RawId = std::array<std::uint8_t, 16>;

RawId path_digest(std::string_view utf8_path);

std::string to_hex(const RawId& raw);
std::optional<RawId> from_hex(std::string_view hex);

/// Lowercase hex id for a path; stable across runs.
inline std::string path_id(std::string_view utf8_path) { return to_hex(path_digest(utf8_path)); }

}  // namespace gridsight

#endif  // GRIDSIGHT_IDS_HPP
