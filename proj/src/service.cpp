#include "gridsight/service.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <unordered_set>

#include <httplib.h>

#include "gridsight/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace gridsight {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

constexpr const char* kIndexFileName = "index.gsix";
constexpr const char* kThumbDirName = "thumbs";

std::uint64_t parse_size(std::string_view text) {
    if (text.empty()) throw InvalidFilter("empty size");
    std::uint64_t multiplier = 1;
    switch (std::toupper(static_cast<unsigned char>(text.back()))) {
        case 'K':
            multiplier = 1ull << 10;
            break;
        case 'M':
            multiplier = 1ull << 20;
            break;
        case 'G':
            multiplier = 1ull << 30;
            break;
        default:
            break;
    }
    if (multiplier != 1) text.remove_suffix(1);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw InvalidFilter("bad size: " + std::string(text));
    return value * multiplier;
}

template <typename T>
std::optional<Range<T>> range_field(const json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    const json& v = body[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw InvalidFilter(std::string(key) + " must be [lo, hi]");
    return Range<T>{v[0].get<T>(), v[1].get<T>()};
}

json issue_json(const ScanIssue& issue) {
    return {{"code", to_string(issue.kind)}, {"path", issue.path}, {"message", issue.message}};
}

json record_json(const ImageRecord& r) {
    return {{"id", r.id},       {"path", r.path},         {"name", r.file_name()}, {"size", r.size_bytes},
            {"mtime", r.mtime}, {"ctime", r.ctime},       {"width", r.width},      {"height", r.height},
            {"folder_id", r.folder_id}, {"undecodable", r.undecodable}};
}

/// Layout over `records` with the visually sorted, decodable ones first and
/// undecodable ones appended in listing order.
GridLayout visual_layout(const std::vector<ImageRecord>& records, const DescriptorMap& descriptors, int columns,
                         SortConfig config) {
    std::vector<int> sortable, rest;
    for (int i = 0; i < static_cast<int>(records.size()); ++i)
        (descriptors.contains(records[static_cast<std::size_t>(i)].id) ? sortable : rest).push_back(i);

    std::vector<Descriptor> parts;
    parts.reserve(sortable.size());
    for (int i : sortable) parts.push_back(descriptors.at(records[static_cast<std::size_t>(i)].id));
    const Eigen::MatrixXf features = combine_all(parts, config.weight_profile);
    const GridLayout sorted = ssm_sort(features, columns, config);

    GridLayout layout = GridLayout::scanline(static_cast<int>(records.size()), columns);
    std::size_t s = 0;
    for (int item : sorted.cells)
        if (item != kEmpty) layout.cells[s++] = sortable[static_cast<std::size_t>(item)];
    for (int item : rest) layout.cells[s++] = item;
    return layout;
}

}  // namespace

std::optional<SortMode> parse_sort_mode(std::string_view text) {
    if (text == "visual") return SortMode::visual;
    if (text == "name") return SortMode::name;
    if (text == "mtime") return SortMode::mtime;
    if (text == "ctime") return SortMode::ctime;
    if (text == "size") return SortMode::size;
    return std::nullopt;
}

const char* to_string(SortMode mode) {
    switch (mode) {
        case SortMode::visual:
            return "visual";
        case SortMode::name:
            return "name";
        case SortMode::mtime:
            return "mtime";
        case SortMode::ctime:
            return "ctime";
        case SortMode::size:
            return "size";
    }
    return "visual";
}

json layout_json(const GridLayout& layout, const std::vector<ImageRecord>& records) {
    if (!layout.satisfies_invariants() || layout.count != static_cast<int>(records.size()))
        throw std::logic_error("layout violates grid invariants");
    json cells = json::array();
    for (int item : layout.cells) {
        if (item == kEmpty) cells.push_back(nullptr);
        else cells.push_back(records[static_cast<std::size_t>(item)].id);
    }
    return {{"columns", layout.columns}, {"rows", layout.rows}, {"count", layout.count}, {"cells", std::move(cells)}};
}

Range<std::uint64_t> parse_size_range(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw InvalidFilter("size range must be LO:HI");
    Range<std::uint64_t> range{parse_size(text.substr(0, colon)), parse_size(text.substr(colon + 1))};
    if (range.lo > range.hi) throw InvalidFilter("size range has lo > hi");
    return range;
}

FilterSpec parse_filter(const json& body) {
    FilterSpec filter;
    if (body.is_null()) return filter;
    if (!body.is_object()) throw InvalidFilter("filter must be an object");
    if (body.contains("name") && !body["name"].is_null()) {
        if (!body["name"].is_string()) throw InvalidFilter("name must be a string");
        filter.name_substring = body["name"].get<std::string>();
    }
    filter.size_range = range_field<std::uint64_t>(body, "size");
    filter.mtime_range = range_field<Timestamp>(body, "mtime");
    filter.ctime_range = range_field<Timestamp>(body, "ctime");
    filter.validate();
    return filter;
}

fs::path default_cache_dir() {
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "gridsight";
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "gridsight";
    return fs::current_path() / ".gridsight-cache";
}

// ---------------------------------------------------------------------------
// Session

struct Session::Job {
    std::uint64_t revision = 0;
    IndexProgress progress;
    std::atomic<bool> cancel{false};

    std::mutex mutex;
    std::condition_variable cv;
    bool done = false;
    IndexedCorpus corpus;
    std::string error;

    void wait() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return done; });
    }
    bool finished() {
        std::lock_guard lock(mutex);
        return done;
    }
};

Session::Session(EngineOptions options) : options_(std::move(options)) {
    if (options_.cache_dir.empty()) options_.cache_dir = default_cache_dir();
    index_ = FeatureIndex::open(options_.cache_dir / kIndexFileName);
    if (options_.embeddings) embeddings_ = read_embeddings(*options_.embeddings);
}

Session::~Session() {
    if (auto job = current_job()) job->cancel = true;
    for (auto& worker : workers_)
        if (worker.joinable()) worker.join();
}

std::uint64_t Session::revision() const {
    std::lock_guard lock(mutex_);
    return revision_;
}

std::shared_ptr<Session::Job> Session::current_job() const {
    std::lock_guard lock(mutex_);
    return job_;
}

IndexedCorpus Session::index_now(std::vector<ImageRecord> records) {
    std::lock_guard lock(index_mutex_);
    IndexOptions opts;
    if (embeddings_) opts.embeddings = &*embeddings_;
    IndexedCorpus corpus = index_records(std::move(records), index_, opts);
    if (index_.pending_count() > 0) index_.checkpoint();
    return corpus;
}

void Session::start_index_job(std::shared_ptr<Job> job, std::vector<ImageRecord> records) {
    job->progress.total = records.size();
    workers_.emplace_back([this, job, records = std::move(records)]() mutable {
        IndexedCorpus corpus;
        std::string error;
        try {
            std::lock_guard lock(index_mutex_);
            IndexOptions opts;
            opts.progress = &job->progress;
            opts.cancel = &job->cancel;
            if (embeddings_) opts.embeddings = &*embeddings_;
            corpus = index_records(std::move(records), index_, opts);
            if (index_.pending_count() > 0) index_.checkpoint();
        } catch (const std::exception& e) {
            error = e.what();
        }
        {
            std::lock_guard lock(job->mutex);
            job->corpus = std::move(corpus);
            job->error = std::move(error);
            job->done = true;
        }
        job->cv.notify_all();
    });
}

Session::RootsResult Session::set_roots(const ScanRequest& request) {
    std::lock_guard command(command_mutex_);

    ScanResult scanned = scan(request);
    auto job = std::make_shared<Job>();

    RootsResult result;
    {
        std::lock_guard lock(mutex_);
        if (job_) job_->cancel = true;
        result.revision = job->revision = ++revision_;
        request_ = request;
        records_ = scanned.records;
        job_ = job;
        layouts_.clear();
    }
    result.count = scanned.records.size();
    result.issues = std::move(scanned.issues);
    start_index_job(job, std::move(scanned.records));
    return result;
}

void Session::wait_indexed() {
    if (auto job = current_job()) job->wait();
}

json Session::grid(int columns, SortMode mode, std::optional<std::uint64_t> seed) {
    if (columns < 1) throw std::invalid_argument("cols must be >= 1");
    auto job = current_job();
    std::vector<ImageRecord> records;
    std::uint64_t revision;
    {
        std::lock_guard lock(mutex_);
        records = records_;
        revision = revision_;
    }
    const std::uint64_t used_seed = seed.value_or(options_.seed);

    GridLayout layout;
    if (!job || records.empty()) {
        layout = GridLayout::scanline(0, columns);
    } else if (mode != SortMode::visual) {
        const auto key = *parse_sort_key(to_string(mode));
        std::unordered_map<std::string, int> position;
        for (int i = 0; i < static_cast<int>(records.size()); ++i) position[records[static_cast<std::size_t>(i)].id] = i;
        const auto ordered = sort_by_metadata(records, key);
        layout = GridLayout::scanline(static_cast<int>(records.size()), columns);
        for (std::size_t s = 0; s < ordered.size(); ++s) layout.cells[s] = position.at(ordered[s].id);
    } else {
        job->wait();
        const auto cache_key = std::make_tuple(revision, columns, used_seed);
        {
            std::lock_guard lock(mutex_);
            if (auto it = layouts_.find(cache_key); it != layouts_.end()) layout = it->second;
        }
        if (layout.cells.empty()) {
            const auto& corpus = job->corpus;
            SortConfig config;
            config.seed = used_seed;
            config.shuffle = true;
            config.starts = starts_for(static_cast<int>(records.size()));
            const int stages = config.starts * std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(
                                               std::max(columns, grid_rows(static_cast<int>(records.size()), columns))))));
            int finished_stages = 0;
            config.on_stage = [&](int, const GridLayout&, double) {
                std::lock_guard lock(mutex_);
                sort_status_.fraction = std::min(1.0, static_cast<double>(++finished_stages) / stages);
            };
            {
                std::lock_guard lock(mutex_);
                sort_status_ = {true, 0.0};
            }
            layout = visual_layout(corpus.records, corpus.descriptors, columns, config);
            std::lock_guard lock(mutex_);
            sort_status_ = {false, 1.0};
            layouts_.insert_or_assign(cache_key, layout);
        }
        records = job->corpus.records;
    }

    json out = layout_json(layout, records);
    out["revision"] = revision;
    out["mode"] = to_string(mode);
    if (mode == SortMode::visual) out["seed"] = used_seed;
    return out;
}

json Session::search(const std::vector<std::string>& query_ids, const json& scope) {
    if (query_ids.empty()) throw EmptyQuerySet();
    auto job = current_job();
    if (job) job->wait();

    DescriptorMap descriptors;
    std::unordered_map<std::string, ImageRecord> known;
    if (job) {
        descriptors = job->corpus.descriptors;
        for (const auto& r : job->corpus.records) known.emplace(r.id, r);
    }

    QuerySet queries;
    for (const auto& id : query_ids)
        if (std::find(queries.query_ids.begin(), queries.query_ids.end(), id) == queries.query_ids.end())
            queries.query_ids.push_back(id);

    if (scope.is_object() && scope.contains("roots")) {
        ScanRequest wider;
        for (const auto& root : scope["roots"]) wider.roots.emplace_back(root.get<std::string>());
        wider.recursive = scope.value("recursive", true);
        wider.filter = parse_filter(scope.value("filter", json()));
        ScanResult scanned = scan(wider);
        IndexedCorpus extra = index_now(std::move(scanned.records));
        for (auto& r : extra.records) {
            queries.scope_ids.push_back(r.id);
            known.insert_or_assign(r.id, r);
        }
        for (auto& [id, d] : extra.descriptors) descriptors.insert_or_assign(id, std::move(d));
        std::lock_guard lock(mutex_);
        for (const auto& [id, r] : known) extra_records_.insert_or_assign(id, r);
    } else if (scope.is_array()) {
        for (const auto& id : scope) {
            const auto text = id.get<std::string>();
            if (!known.contains(text)) throw UnknownId(text);
            queries.scope_ids.push_back(text);
        }
    } else if (scope.is_null()) {
        for (const auto& [id, r] : known) queries.scope_ids.push_back(id);
    } else {
        throw std::invalid_argument("scope must be null, an id list or {roots, recursive}");
    }

    const std::vector<std::string> unresolved = unresolved_ids(queries, descriptors);
    for (const auto& id : unresolved) std::erase(queries.query_ids, id);
    if (queries.query_ids.empty()) throw UnknownId(unresolved.front());
    std::erase_if(queries.scope_ids, [&](const std::string& id) { return !descriptors.contains(id); });

    json results = json::array();
    for (const auto& r : rank(queries, descriptors)) {
        json item{{"id", r.id}, {"distance", r.distance}};
        if (auto it = known.find(r.id); it != known.end()) item["path"] = it->second.path;
        results.push_back(std::move(item));
    }
    return {{"revision", job ? job->revision : 0},
            {"query_ids", queries.query_ids},
            {"unresolved", unresolved},
            {"results", std::move(results)}};
}

json Session::progress() const {
    std::lock_guard lock(mutex_);
    json index{{"running", false}, {"done", 0}, {"total", 0}, {"fraction", 1.0}};
    if (job_) {
        const bool finished = job_->progress.done.load() >= job_->progress.total.load() && job_->progress.total > 0;
        index = {{"running", !finished && !job_->cancel},
                 {"done", job_->progress.done.load()},
                 {"total", job_->progress.total.load()},
                 {"fraction", job_->progress.fraction()}};
    }
    return {{"revision", revision_},
            {"index", std::move(index)},
            {"sort", {{"running", sort_status_.running}, {"fraction", sort_status_.fraction}}}};
}

json Session::summary() const {
    std::lock_guard lock(mutex_);
    json roots = json::array();
    for (const auto& r : request_.roots) roots.push_back(r.string());
    json records = json::array();
    for (const auto& r : records_) records.push_back(record_json(r));
    return {{"revision", revision_},
            {"roots", std::move(roots)},
            {"recursive", request_.recursive},
            {"count", records_.size()},
            {"records", std::move(records)}};
}

std::optional<ImageRecord> Session::record(const std::string& id) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : records_)
        if (r.id == id) return r;
    if (auto it = extra_records_.find(id); it != extra_records_.end()) return it->second;
    return std::nullopt;
}

std::vector<std::uint8_t> Session::thumbnail(const std::string& id, int edge) {
    auto rec = record(id);
    if (!rec) throw UnknownId(id);
    return cached_thumbnail(options_.cache_dir / kThumbDirName, *rec, edge);
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const json& detail = nullptr) {
    res.status = status;
    res.set_content(json{{"code", code}, {"message", message}, {"detail", detail}}.dump(), "application/json");
}

template <typename Fn>
auto guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const UnknownId& e) {
            send_error(res, 404, "UnknownId", e.what(), e.id());
        } catch (const InvalidFilter& e) {
            send_error(res, 400, "InvalidFilter", e.what());
        } catch (const EmptyQuerySet& e) {
            send_error(res, 400, "EmptyQuerySet", e.what());
        } catch (const DecodeError& e) {
            send_error(res, 422, "DecodeError", e.what(), e.path());
        } catch (const json::exception& e) {
            send_error(res, 400, "BadRequest", "malformed JSON body", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "BadRequest", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

void send_json(httplib::Response& res, const json& body) { res.set_content(body.dump(), "application/json"); }

std::string content_type_for(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "application/octet-stream";
}

int int_param(const httplib::Request& req, const char* name, int fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string text = req.get_param_value(name);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::invalid_argument(std::string(name) + " must be an integer");
    return value;
}

}  // namespace

HttpService::HttpService(Session& session) : session_(session), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
    auto& s = *server_;

    s.Post("/session/roots", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        ScanRequest request;
        if (!body.contains("roots") || !body["roots"].is_array() || body["roots"].empty())
            throw std::invalid_argument("roots must be a nonempty array");
        for (const auto& root : body["roots"]) request.roots.emplace_back(root.get<std::string>());
        request.recursive = body.value("recursive", false);
        request.include_hidden = body.value("include_hidden", false);
        request.filter = parse_filter(body.value("filter", json()));
        const auto result = session_.set_roots(request);
        json issues = json::array();
        for (const auto& issue : result.issues) issues.push_back(issue_json(issue));
        send_json(res, {{"revision", result.revision}, {"count", result.count}, {"errors", std::move(issues)}});
    }));

    s.Get("/session", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, session_.summary());
    }));

    s.Get("/grid", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const int cols = int_param(req, "cols", 8);
        const std::string mode_text = req.has_param("mode") ? req.get_param_value("mode") : "visual";
        const auto mode = parse_sort_mode(mode_text);
        if (!mode) throw std::invalid_argument("unknown mode: " + mode_text);
        std::optional<std::uint64_t> seed;
        if (req.has_param("seed")) seed = static_cast<std::uint64_t>(int_param(req, "seed", 0));
        send_json(res, session_.grid(cols, *mode, seed));
    }));

    s.Post("/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        const auto ids = body.at("query_ids").get<std::vector<std::string>>();
        send_json(res, session_.search(ids, body.value("scope", json())));
    }));

    s.Get("/thumb/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const int edge = int_param(req, "edge", 128);
        if (edge < 16 || edge > 4096) throw std::invalid_argument("edge must be within [16, 4096]");
        const auto bytes = session_.thumbnail(req.path_params.at("id"), edge);
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    }));

    s.Get("/image/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.path_params.at("id");
        const auto rec = session_.record(id);
        if (!rec) throw UnknownId(id);
        const auto bytes = read_file_bytes(rec->path);
        res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(rec->path));
    }));

    s.Get("/progress", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, session_.progress());
    }));
}

int HttpService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

// ---------------------------------------------------------------------------
// CLI

namespace {

struct Prepared {
    IndexedCorpus corpus;
    int exit_code = 0;
};

Prepared prepare(const IndexCommand& command, std::ostream& log) {
    Prepared out;
    ScanRequest request;
    request.roots = command.paths;
    request.recursive = command.recursive;
    request.include_hidden = command.include_hidden;
    request.filter = command.filter;

    const auto scan_start = Clock::now();
    ScanResult scanned = scan(request);
    const double scan_ms = elapsed_ms(scan_start);
    for (const auto& issue : scanned.issues) {
        log << "error: " << to_string(issue.kind) << ": " << issue.path << " (" << issue.message << ")\n";
        out.exit_code = 2;
    }

    const fs::path cache = command.cache_dir.empty() ? default_cache_dir() : command.cache_dir;
    FeatureIndex index = FeatureIndex::open(cache / kIndexFileName);
    if (index.load_report().rebuilt)
        log << "warning: index was corrupt and is rebuilt (" << index.load_report().error << ")\n";

    std::optional<EmbeddingTable> embeddings;
    if (command.embeddings) embeddings = read_embeddings(*command.embeddings);
    IndexOptions opts;
    if (embeddings) opts.embeddings = &*embeddings;

    const std::size_t files = scanned.records.size();
    out.corpus = index_records(std::move(scanned.records), index, opts);
    const auto store_start = Clock::now();
    if (index.pending_count() > 0) index.checkpoint();
    const double checkpoint_ms = elapsed_ms(store_start);

    const auto& st = out.corpus.stats;
    log << std::fixed << std::setprecision(2);
    log << "scan: " << files << " files in " << scan_ms << " ms\n";
    log << "decode+features: " << st.features_ms << " ms (decoded " << st.decoded << ", cache hits "
        << st.cache_hits << ", misses " << st.cache_misses << ", undecodable " << st.undecodable << ")\n";
    log << "store: " << st.store_ms + checkpoint_ms << " ms (" << index.live_count() << " entries)\n";
    log << "cache hit ratio: " << std::setprecision(1) << 100.0 * st.hit_ratio() << "%\n";
    return out;
}

}  // namespace

int run_index(const IndexCommand& command, std::ostream& log, IndexStats* stats) {
    Prepared prepared = prepare(command, log);
    if (stats) *stats = prepared.corpus.stats;
    return prepared.exit_code;
}

int run_sort(const SortCommand& command, std::ostream& log) {
    if (command.columns < 1) throw std::invalid_argument("--columns must be >= 1");
    if (command.cell < 16) throw std::invalid_argument("--cell must be >= 16");
    Prepared prepared = prepare(command.index, log);
    auto& corpus = prepared.corpus;

    std::vector<ImageRecord> items;
    std::vector<Descriptor> descriptors;
    for (const auto& r : corpus.records) {
        if (auto it = corpus.descriptors.find(r.id); it != corpus.descriptors.end()) {
            items.push_back(r);
            descriptors.push_back(it->second);
        }
    }

    SortConfig config;
    config.seed = command.seed;
    config.shuffle = true;
    config.starts = starts_for(static_cast<int>(descriptors.size()));
    const auto sort_start = Clock::now();
    const GridLayout layout = ssm_sort(combine_all(descriptors, config.weight_profile), command.columns, config);
    log << "sort: " << items.size() << " images on " << layout.columns << "x" << layout.rows << " in " << std::fixed
        << std::setprecision(2) << elapsed_ms(sort_start) << " ms\n";

    const fs::path cache = command.index.cache_dir.empty() ? default_cache_dir() : command.index.cache_dir;
    const int cell = command.cell;
    PixelBuffer montage(std::max(1, layout.rows * cell), layout.columns * cell, 24);
    json manifest_cells = json::array();
    for (int s = 0; s < static_cast<int>(layout.cells.size()); ++s) {
        const int item = layout.cells[static_cast<std::size_t>(s)];
        const int row = s / layout.columns, col = s % layout.columns;
        if (item == kEmpty) {
            manifest_cells.push_back(nullptr);
            continue;
        }
        ImageRecord& record = items[static_cast<std::size_t>(item)];
        manifest_cells.push_back({{"position", s}, {"row", row}, {"col", col}, {"id", record.id}, {"path", record.path}});
        try {
            const auto bytes = cached_thumbnail(cache / kThumbDirName, record, cell);
            const PixelBuffer thumb = decode_image(bytes, record.path);
            const int top = row * cell + (cell - thumb.rows) / 2;
            const int left = col * cell + (cell - thumb.cols) / 2;
            for (int r = 0; r < thumb.rows; ++r)
                std::copy_n(thumb.px(r, 0), thumb.cols * 3, montage.px(top + r, left));
        } catch (const DecodeError& e) {
            log << "warning: " << e.what() << "\n";
        }
    }

    write_png(command.output, montage);
    fs::path manifest_path = command.manifest.value_or(fs::path(command.output).replace_extension(".json"));
    const json manifest{{"columns", layout.columns}, {"rows", layout.rows}, {"count", layout.count},
                        {"seed", command.seed},      {"cell", cell},        {"cells", std::move(manifest_cells)}};
    const std::string text = manifest.dump(2);
    write_file_bytes(manifest_path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    log << "wrote " << command.output.string() << " and " << manifest_path.string() << "\n";
    return prepared.exit_code;
}

}  // namespace gridsight
