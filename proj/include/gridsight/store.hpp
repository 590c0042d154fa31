#ifndef GRIDSIGHT_STORE_HPP
#define GRIDSIGHT_STORE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "gridsight/features.hpp"
#include "gridsight/ids.hpp"
#include "gridsight/imgscan.hpp"

namespace gridsight {

/// Symmetric per-vector int8 quantization: value = scale * q.
struct Quantized {
    float scale = 0.0f;
    std::vector<std::int8_t> values;
    bool operator==(const Quantized&) const = default;
};

/// scale = max|v| / 127, q = round(v / scale). Throws NonFiniteInput.
Quantized quantize(const Eigen::Ref<const Eigen::VectorXf>& v);
Eigen::VectorXf dequantize(const Quantized& q);

struct IndexEntry {
    RawId id{};
    Timestamp mtime = 0;
    std::uint64_t size_bytes = 0;
    std::array<Quantized, kPartCount> parts;  ///< empty values = part absent
    std::uint8_t degenerate = 0;

    static IndexEntry from_descriptor(const RawId& id, Timestamp mtime, std::uint64_t size_bytes,
                                      const Descriptor& descriptor);
    Descriptor descriptor() const;

    bool operator==(const IndexEntry&) const = default;
};

inline constexpr std::array<char, 4> kIndexMagic{'G', 'S', 'I', 'X'};
inline constexpr std::uint16_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderSize = 24;

/// Header: magic, u16 version, u16 part count, u16 dims[4], u64 record count.
/// Record: id[16], i64 mtime, u64 size, u8 present mask, u8 degenerate mask,
/// per present part (f32 scale, i8[dim]), u32 CRC-32 of the record bytes.
/// All integers little-endian.
std::vector<std::uint8_t> serialize_index(std::span<const IndexEntry> records);

struct ParsedIndex {
    std::vector<IndexEntry> records;
    std::size_t trailing_bytes = 0;  ///< unreferenced bytes past the counted records
};

/// Throws CorruptIndex with the byte offset of the first bad structure.
ParsedIndex parse_index(std::span<const std::uint8_t> bytes);

/// Descriptor cache keyed by path hash and validated against (mtime, size).
/// One writer; all mutation goes through upsert/checkpoint/compact.
class FeatureIndex {
public:
    struct LoadReport {
        std::size_t records = 0;
        std::size_t trailing_bytes = 0;
        bool rebuilt = false;  ///< file was corrupt and has been discarded
        std::string error;
    };

    FeatureIndex() = default;

    /// Loads `path` if it exists. A corrupt file is discarded and the index
    /// starts empty (see load_report()).
    static FeatureIndex open(const std::filesystem::path& path);

    /// Dequantized descriptor iff the id is present and (mtime, size) match.
    std::optional<Descriptor> lookup(const RawId& id, Timestamp mtime, std::uint64_t size_bytes) const;
    const IndexEntry* find(const RawId& id) const;

    void upsert(IndexEntry entry);

    /// Writes every record to a temporary file, syncs it and renames it over
    /// the index. Throws IoError.
    void checkpoint();

    /// Drops superseded records, then checkpoints.
    void compact();

    std::size_t live_count() const { return live_.size(); }
    std::size_t record_count() const { return log_.size(); }
    std::size_t pending_count() const { return pending_; }
    const std::filesystem::path& path() const { return path_; }
    const LoadReport& load_report() const { return report_; }
    std::vector<IndexEntry> live_entries() const;

private:
    struct IdHash {
        std::size_t operator()(const RawId& id) const noexcept;
    };

    std::filesystem::path path_;
    std::vector<IndexEntry> log_;
    std::unordered_map<RawId, std::size_t, IdHash> live_;
    std::size_t pending_ = 0;
    LoadReport report_;
};

}  // namespace gridsight

#endif  // GRIDSIGHT_STORE_HPP
