#ifndef GRIDSIGHT_IMGSCAN_HPP
#define GRIDSIGHT_IMGSCAN_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridsight/pixels.hpp"

namespace gridsight {

/// Nanoseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct ImageRecord {
    std::string id;
    std::string path;
    std::uint64_t size_bytes = 0;
    Timestamp mtime = 0;
    Timestamp ctime = 0;
    int width = 0;
    int height = 0;
    std::string folder_id;
    bool undecodable = false;

    std::string file_name() const { return std::filesystem::path(path).filename().string(); }
    bool operator==(const ImageRecord&) const = default;
};

template <typename T>
struct Range {
    T lo;
    T hi;
    bool contains(T v) const noexcept { return lo <= v && v <= hi; }
};

struct FilterSpec {
    std::optional<std::string> name_substring;
    std::optional<Range<Timestamp>> mtime_range;
    std::optional<Range<Timestamp>> ctime_range;
    std::optional<Range<std::uint64_t>> size_range;

    /// Throws InvalidFilter when a range has lo > hi.
    void validate() const;
    bool matches(const ImageRecord& record) const;
};

std::set<std::string> default_extensions();

struct ScanRequest {
    std::vector<std::filesystem::path> roots;
    bool recursive = false;
    FilterSpec filter;
    std::set<std::string> extensions = default_extensions();
    bool include_hidden = false;
};

struct ScanIssue {
    enum class Kind { root_not_found, permission_denied, io_error };
    Kind kind;
    std::string path;
    std::string message;
};

const char* to_string(ScanIssue::Kind kind);

struct ScanResult {
    std::vector<ImageRecord> records;
    std::vector<ScanIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
};

/// Canonicalized, deduplicated roots with descendants of recursive roots removed.
std::vector<std::filesystem::path> normalize_roots(const std::vector<std::filesystem::path>& roots,
                                                   bool recursive);

/// Walks every root and returns matching files in path order. Per-root
/// failures are collected in `issues`; the remaining roots are still walked.
ScanResult scan(const ScanRequest& request);

/// Reads size and timestamps for a single file. Returns nullopt when it cannot be stat'ed.
std::optional<ImageRecord> stat_record(const std::filesystem::path& path, const std::string& folder_id = {});

/// Decodes the record's file and updates its dimensions. On failure the
/// record is flagged undecodable and DecodeError is rethrown.
PixelBuffer decode(ImageRecord& record);

/// Number of pixel decodes performed through decode() in this process.
std::uint64_t decode_count() noexcept;

enum class SortKey { name, mtime, ctime, size };

std::optional<SortKey> parse_sort_key(std::string_view text);

/// Stable sort on `key`; equal keys fall back to ascending path.
std::vector<ImageRecord> sort_by_metadata(std::vector<ImageRecord> records, SortKey key, bool descending = false);

/// `<cache>/<first 2 hex of id>/<id>.<max_edge>.png`
std::filesystem::path thumbnail_cache_path(const std::filesystem::path& cache, const std::string& id, int max_edge);

/// PNG bytes of the record's thumbnail, generated on first use and cached on disk.
std::vector<std::uint8_t> cached_thumbnail(const std::filesystem::path& cache, ImageRecord& record, int max_edge);

}  // namespace gridsight

#endif  // GRIDSIGHT_IMGSCAN_HPP
