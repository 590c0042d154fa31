#ifndef GRIDSIGHT_SERVICE_HPP
#define GRIDSIGHT_SERVICE_HPP

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridsight/imgscan.hpp"
#include "gridsight/indexer.hpp"
#include "gridsight/search.hpp"
#include "gridsight/sortgrid.hpp"

namespace httplib {
class Server;
}

namespace gridsight {

enum class SortMode { visual, name, mtime, ctime, size };

std::optional<SortMode> parse_sort_mode(std::string_view text);
const char* to_string(SortMode mode);

/// (N, M, K, cells) with ids in place of item indices; null marks the empty tail.
nlohmann::json layout_json(const GridLayout& layout, const std::vector<ImageRecord>& records);

/// "LO:HI" byte range, each side optionally suffixed K/M/G (binary units).
Range<std::uint64_t> parse_size_range(std::string_view text);

/// Parses {name, size:[lo,hi], mtime:[lo,hi], ctime:[lo,hi]}. Throws InvalidFilter.
FilterSpec parse_filter(const nlohmann::json& body);

struct EngineOptions {
    std::filesystem::path cache_dir;
    std::optional<std::filesystem::path> embeddings;
    std::uint64_t seed = 0;
};

std::filesystem::path default_cache_dir();

/// Interactive state behind the HTTP API. Mutations are serialized and bump
/// the revision; descriptor computation runs on a background worker.
class Session {
public:
    explicit Session(EngineOptions options);
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    struct RootsResult {
        std::uint64_t revision = 0;
        std::size_t count = 0;
        std::vector<ScanIssue> issues;
    };

    /// Rescans, replaces the record list and starts indexing it.
    RootsResult set_roots(const ScanRequest& request);

    /// Blocks until the current revision's descriptors are ready.
    void wait_indexed();

    /// Visual mode runs (or reuses) a sort job; other modes order by metadata.
    nlohmann::json grid(int columns, SortMode mode, std::optional<std::uint64_t> seed = {});

    /// Scope is either an id list, {"roots": [...], "recursive": bool} or
    /// null for the whole session. Throws UnknownId when no query resolves.
    nlohmann::json search(const std::vector<std::string>& query_ids, const nlohmann::json& scope);

    nlohmann::json progress() const;
    nlohmann::json summary() const;

    std::optional<ImageRecord> record(const std::string& id) const;
    std::vector<std::uint8_t> thumbnail(const std::string& id, int edge);

    std::uint64_t revision() const;
    const EngineOptions& options() const { return options_; }

private:
    struct Job;

    void start_index_job(std::shared_ptr<Job> job, std::vector<ImageRecord> records);
    std::shared_ptr<Job> current_job() const;
    IndexedCorpus index_now(std::vector<ImageRecord> records);

    EngineOptions options_;
    std::optional<EmbeddingTable> embeddings_;

    std::mutex command_mutex_;  ///< serializes whole mutations, scan included
    mutable std::mutex mutex_;
    std::uint64_t revision_ = 0;
    ScanRequest request_;
    std::vector<ImageRecord> records_;
    std::unordered_map<std::string, ImageRecord> extra_records_;  ///< reached through widened search scopes
    std::shared_ptr<Job> job_;
    std::map<std::tuple<std::uint64_t, int, std::uint64_t>, GridLayout> layouts_;

    struct SortStatus {
        bool running = false;
        double fraction = 1.0;
    };
    SortStatus sort_status_;

    std::mutex index_mutex_;  ///< guards index_ (single writer)
    FeatureIndex index_;

    std::vector<std::thread> workers_;
};

/// Loopback JSON API over a Session.
class HttpService {
public:
    explicit HttpService(Session& session);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds to an ephemeral port on `host` and returns it, or -1.
    int bind_any_port(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen_after_bind();
    void stop();

private:
    void install_routes();

    Session& session_;
    std::unique_ptr<httplib::Server> server_;
};

struct IndexCommand {
    std::vector<std::filesystem::path> paths;
    bool recursive = false;
    bool include_hidden = false;
    FilterSpec filter;
    std::filesystem::path cache_dir;
    std::optional<std::filesystem::path> embeddings;
};

struct SortCommand {
    IndexCommand index;
    int columns = 8;
    std::uint64_t seed = 0;
    int cell = 64;
    std::filesystem::path output;
    std::optional<std::filesystem::path> manifest;  ///< defaults to <output>.json
};

/// Scans, resolves descriptors and checkpoints the index, logging per-stage
/// timings and the cache hit ratio. Non-zero when any root failed.
int run_index(const IndexCommand& command, std::ostream& log, IndexStats* stats = nullptr);

/// Indexes, sorts visually and writes a PNG montage plus a JSON manifest.
int run_sort(const SortCommand& command, std::ostream& log);

}  // namespace gridsight

#endif  // GRIDSIGHT_SERVICE_HPP
