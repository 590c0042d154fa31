#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "gridsight/error.hpp"
#include "gridsight/service.hpp"

namespace fs = std::filesystem;

namespace {

gridsight::HttpService* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

struct CommonFlags {
    std::vector<std::string> paths;
    bool recursive = false;
    bool hidden = false;
    std::string cache_dir;
    std::string filter_name;
    std::string filter_size;
    std::string embeddings;

    void add_to(CLI::App& cmd, bool paths_required) {
        auto* opt = cmd.add_option("paths", paths, "Folders to include");
        if (paths_required) opt->required();
        cmd.add_flag("-r,--recursive", recursive, "Include subfolders");
        cmd.add_flag("--hidden", hidden, "Include dot-files and dot-folders");
        cmd.add_option("--cache-dir", cache_dir, "Index and thumbnail cache directory");
        cmd.add_option("--filter-name", filter_name, "Case-insensitive file name substring");
        cmd.add_option("--filter-size", filter_size, "Byte range LO:HI, K/M/G suffixes allowed");
        cmd.add_option("--embeddings", embeddings, "External embedding sidecar file");
    }

    gridsight::IndexCommand to_command() const {
        gridsight::IndexCommand c;
        for (const auto& p : paths) c.paths.emplace_back(p);
        c.recursive = recursive;
        c.include_hidden = hidden;
        c.cache_dir = cache_dir.empty() ? gridsight::default_cache_dir() : fs::path(cache_dir);
        if (!filter_name.empty()) c.filter.name_substring = filter_name;
        if (!filter_size.empty()) c.filter.size_range = gridsight::parse_size_range(filter_size);
        if (!embeddings.empty()) c.embeddings = embeddings;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridsight: visually sorted image grids and similarity search over local folders"};
    app.require_subcommand(1);

    CommonFlags index_flags;
    auto* index_cmd = app.add_subcommand("index", "Scan folders and build or refresh the feature index");
    index_flags.add_to(*index_cmd, true);

    CommonFlags sort_flags;
    int columns = 8;
    std::uint64_t seed = 0;
    int cell = 64;
    std::string output = "montage.png";
    std::string manifest;
    auto* sort_cmd = app.add_subcommand("sort", "Sort images onto a grid and render a montage");
    sort_flags.add_to(*sort_cmd, true);
    sort_cmd->add_option("-c,--columns", columns, "Grid columns")->check(CLI::PositiveNumber);
    sort_cmd->add_option("--seed", seed, "Seed for the initial shuffle");
    sort_cmd->add_option("--cell", cell, "Montage cell edge in pixels")->check(CLI::Range(16, 1024));
    sort_cmd->add_option("-o,--output", output, "Montage PNG path");
    sort_cmd->add_option("--manifest", manifest, "Layout manifest path (default: output with .json)");

    CommonFlags serve_flags;
    int port = 8765;
    std::string bind = "127.0.0.1";
    std::uint64_t serve_seed = 0;
    auto* serve_cmd = app.add_subcommand("serve", "Run the local HTTP API");
    serve_flags.add_to(*serve_cmd, false);
    serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--bind", bind, "Listen address");
    serve_cmd->add_option("--seed", serve_seed, "Default seed for visual grids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*index_cmd) return gridsight::run_index(index_flags.to_command(), std::cout);

        if (*sort_cmd) {
            gridsight::SortCommand command;
            command.index = sort_flags.to_command();
            command.columns = columns;
            command.seed = seed;
            command.cell = cell;
            command.output = output;
            if (!manifest.empty()) command.manifest = manifest;
            return gridsight::run_sort(command, std::cout);
        }

        const auto base = serve_flags.to_command();
        gridsight::EngineOptions options;
        options.cache_dir = base.cache_dir;
        options.embeddings = base.embeddings;
        options.seed = serve_seed;
        gridsight::Session session(options);
        if (!base.paths.empty()) {
            gridsight::ScanRequest request;
            request.roots = base.paths;
            request.recursive = base.recursive;
            request.include_hidden = base.include_hidden;
            request.filter = base.filter;
            const auto result = session.set_roots(request);
            for (const auto& issue : result.issues)
                std::cerr << "error: " << gridsight::to_string(issue.kind) << ": " << issue.path << "\n";
            std::cout << "session: " << result.count << " images\n";
        }

        gridsight::HttpService server(session);
        if (!server.bind(bind, port)) {
            std::cerr << "cannot bind " << bind << ":" << port << "\n";
            return 1;
        }
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "listening on http://" << bind << ":" << port << std::endl;
        server.listen_after_bind();
        g_server = nullptr;
        return 0;
    } catch (const gridsight::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
