#include "gridsight/imgscan.hpp"

#include <algorithm>
#include <cctype>
#include <fcntl.h>
#include <map>
#include <sys/stat.h>
#include <system_error>

#include "gridsight/error.hpp"
#include "gridsight/ids.hpp"

namespace fs = std::filesystem;

namespace gridsight {

namespace {

std::atomic<std::uint64_t> g_decodes{0};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_descendant(const fs::path& child, const fs::path& parent) {
    auto c = child.begin();
    for (auto p = parent.begin(); p != parent.end(); ++p, ++c) {
        if (p->empty()) continue;  // trailing separator
        if (c == child.end() || *c != *p) return false;
    }
    return c != child.end();
}

Timestamp to_ns(const statx_timestamp& t) {
    return static_cast<Timestamp>(t.tv_sec) * 1'000'000'000 + t.tv_nsec;
}

ScanIssue issue_from(const std::error_code& ec, const fs::path& path) {
    const auto kind = ec == std::errc::permission_denied ? ScanIssue::Kind::permission_denied
                      : ec == std::errc::no_such_file_or_directory ? ScanIssue::Kind::root_not_found
                                                                    : ScanIssue::Kind::io_error;
    return {kind, path.string(), ec.message()};
}

struct Walker {
    const ScanRequest& request;
    std::string folder_id;
    std::map<std::string, ImageRecord>& found;
    std::vector<ScanIssue>& issues;

    void walk(const fs::path& dir) {
        std::error_code ec;
        fs::directory_iterator it(dir, ec);
        if (ec) {
            issues.push_back(issue_from(ec, dir));
            return;
        }
        std::vector<fs::path> subdirs;
        for (; it != fs::directory_iterator(); it.increment(ec)) {
            if (ec) {
                issues.push_back(issue_from(ec, dir));
                break;
            }
            const fs::path& path = it->path();
            const std::string name = path.filename().string();
            if (!request.include_hidden && !name.empty() && name.front() == '.') continue;

            std::error_code sec;
            const auto status = it->symlink_status(sec);
            if (sec || fs::is_symlink(status)) continue;

            if (fs::is_directory(status)) {
                if (request.recursive) subdirs.push_back(path);
                continue;
            }
            if (!fs::is_regular_file(status)) continue;

            std::string ext = lower(path.extension().string());
            if (!ext.empty()) ext.erase(0, 1);
            if (!request.extensions.contains(ext)) continue;

            auto record = stat_record(path, folder_id);
            if (!record) continue;
            if (!request.filter.matches(*record)) continue;
            found.try_emplace(record->path, std::move(*record));
        }
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs) walk(sub);
    }
};

}  // namespace

const char* to_string(ScanIssue::Kind kind) {
    switch (kind) {
        case ScanIssue::Kind::root_not_found:
            return "RootNotFound";
        case ScanIssue::Kind::permission_denied:
            return "PermissionDenied";
        case ScanIssue::Kind::io_error:
            return "IoError";
    }
    return "IoError";
}

void FilterSpec::validate() const {
    if (mtime_range && mtime_range->lo > mtime_range->hi) throw InvalidFilter("mtime range has lo > hi");
    if (ctime_range && ctime_range->lo > ctime_range->hi) throw InvalidFilter("ctime range has lo > hi");
    if (size_range && size_range->lo > size_range->hi) throw InvalidFilter("size range has lo > hi");
}

bool FilterSpec::matches(const ImageRecord& record) const {
    if (name_substring && !name_substring->empty()) {
        if (lower(record.file_name()).find(lower(*name_substring)) == std::string::npos) return false;
    }
    if (mtime_range && !mtime_range->contains(record.mtime)) return false;
    if (ctime_range && !ctime_range->contains(record.ctime)) return false;
    if (size_range && !size_range->contains(record.size_bytes)) return false;
    return true;
}

std::set<std::string> default_extensions() { return {"png", "jpg", "jpeg", "bmp", "gif", "webp"}; }

std::vector<fs::path> normalize_roots(const std::vector<fs::path>& roots, bool recursive) {
    std::vector<fs::path> out;
    for (const auto& root : roots) {
        std::error_code ec;
        fs::path p = fs::weakly_canonical(fs::absolute(root, ec), ec);
        if (ec) p = fs::absolute(root).lexically_normal();
        if (!p.has_filename() && p.has_parent_path() && p != p.root_path()) p = p.parent_path();
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
    }
    if (recursive) {
        std::vector<fs::path> kept;
        for (const auto& p : out) {
            const bool nested =
                std::any_of(out.begin(), out.end(), [&](const fs::path& other) { return is_descendant(p, other); });
            if (!nested) kept.push_back(p);
        }
        out = std::move(kept);
    }
    return out;
}

ScanResult scan(const ScanRequest& request) {
    request.filter.validate();
    ScanResult result;
    std::map<std::string, ImageRecord> found;

    for (const auto& root : normalize_roots(request.roots, request.recursive)) {
        std::error_code ec;
        const auto status = fs::status(root, ec);
        if (ec || !fs::exists(status)) {
            result.issues.push_back({ScanIssue::Kind::root_not_found, root.string(), "no such directory"});
            continue;
        }
        if (!fs::is_directory(status)) {
            result.issues.push_back({ScanIssue::Kind::root_not_found, root.string(), "not a directory"});
            continue;
        }
        Walker walker{request, path_id(root.string()), found, result.issues};
        walker.walk(root);
    }

    result.records.reserve(found.size());
    for (auto& [path, record] : found) result.records.push_back(std::move(record));
    return result;
}

std::optional<ImageRecord> stat_record(const fs::path& path, const std::string& folder_id) {
    struct statx stx {};
    const std::string native = path.string();
    if (statx(AT_FDCWD, native.c_str(), AT_SYMLINK_NOFOLLOW, STATX_BASIC_STATS | STATX_BTIME, &stx) != 0)
        return std::nullopt;
    ImageRecord record;
    record.path = native;
    record.id = path_id(native);
    record.size_bytes = stx.stx_size;
    record.mtime = to_ns(stx.stx_mtime);
    record.ctime = (stx.stx_mask & STATX_BTIME) ? to_ns(stx.stx_btime) : to_ns(stx.stx_ctime);
    record.folder_id = folder_id;
    return record;
}

PixelBuffer decode(ImageRecord& record) {
    g_decodes.fetch_add(1, std::memory_order_relaxed);
    try {
        PixelBuffer pixels = decode_image_file(record.path);
        record.width = pixels.cols;
        record.height = pixels.rows;
        record.undecodable = false;
        return pixels;
    } catch (const DecodeError&) {
        record.undecodable = true;
        throw;
    }
}

std::uint64_t decode_count() noexcept { return g_decodes.load(std::memory_order_relaxed); }

std::optional<SortKey> parse_sort_key(std::string_view text) {
    if (text == "name") return SortKey::name;
    if (text == "mtime") return SortKey::mtime;
    if (text == "ctime") return SortKey::ctime;
    if (text == "size") return SortKey::size;
    return std::nullopt;
}

std::vector<ImageRecord> sort_by_metadata(std::vector<ImageRecord> records, SortKey key, bool descending) {
    auto compare_key = [key](const ImageRecord& a, const ImageRecord& b) -> int {
        auto three_way = [](const auto& x, const auto& y) { return x < y ? -1 : (y < x ? 1 : 0); };
        switch (key) {
            case SortKey::name:
                return three_way(a.file_name(), b.file_name());
            case SortKey::mtime:
                return three_way(a.mtime, b.mtime);
            case SortKey::ctime:
                return three_way(a.ctime, b.ctime);
            case SortKey::size:
                return three_way(a.size_bytes, b.size_bytes);
        }
        return 0;
    };
    std::stable_sort(records.begin(), records.end(), [&](const ImageRecord& a, const ImageRecord& b) {
        const int k = compare_key(a, b);
        if (k != 0) return descending ? k > 0 : k < 0;
        return a.path < b.path;
    });
    return records;
}

fs::path thumbnail_cache_path(const fs::path& cache, const std::string& id, int max_edge) {
    return cache / id.substr(0, 2) / (id + "." + std::to_string(max_edge) + ".png");
}

std::vector<std::uint8_t> cached_thumbnail(const fs::path& cache, ImageRecord& record, int max_edge) {
    const fs::path target = thumbnail_cache_path(cache, record.id, max_edge);
    std::error_code ec;
    if (fs::is_regular_file(target, ec)) {
        // Entries older than the source are regenerated.
        const auto stamp = fs::last_write_time(target, ec);
        const auto source = fs::last_write_time(record.path, ec);
        if (!ec && stamp >= source) return read_file_bytes(target);
    }
    const PixelBuffer small = thumbnail(decode(record), max_edge);
    std::vector<std::uint8_t> bytes = encode_png(small);
    fs::create_directories(target.parent_path(), ec);
    if (!ec) {
        const fs::path tmp = target.string() + ".tmp";
        try {
            write_file_bytes(tmp, bytes);
            fs::rename(tmp, target, ec);
        } catch (const IoError&) {
            // Serving without a cache entry is fine.
        }
    }
    return bytes;
}

}  // namespace gridsight
