#include "gridsight/indexer.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "gridsight/error.hpp"

namespace gridsight {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
}

std::optional<ProjectionModel> fit_sidecar(const EmbeddingTable& table) {
    if (table.rows.size() < 2) return std::nullopt;
    std::vector<const std::string*> ids;
    for (const auto& [id, row] : table.rows) ids.push_back(&id);
    std::sort(ids.begin(), ids.end(), [](const auto* a, const auto* b) { return *a < *b; });
    Eigen::MatrixXd data(static_cast<Eigen::Index>(ids.size()), table.input_dim);
    for (std::size_t i = 0; i < ids.size(); ++i)
        data.row(static_cast<Eigen::Index>(i)) = table.rows.at(*ids[i]).transpose();
    try {
        return fit_projection(data);
    } catch (const DegenerateData&) {
        return std::nullopt;
    }
}

}  // namespace

IndexedCorpus index_records(std::vector<ImageRecord> records, FeatureIndex& index, const IndexOptions& options) {
    IndexedCorpus corpus;
    corpus.stats.records = records.size();
    if (options.progress) {
        options.progress->total = records.size();
        options.progress->done = 0;
    }
    if (options.embeddings) corpus.projection = fit_sidecar(*options.embeddings);

    struct Slot {
        std::optional<Descriptor> descriptor;
        bool fresh = false;
        bool hit = false;
    };
    std::vector<Slot> slots(records.size());
    std::vector<RawId> raw_ids(records.size());

    const auto features_start = Clock::now();
    parallel_for(records.size(), [&](std::size_t i) {
        if (options.cancel && options.cancel->load()) return;
        ImageRecord& record = records[i];
        raw_ids[i] = from_hex(record.id).value_or(path_digest(record.path));
        if (auto cached = index.lookup(raw_ids[i], record.mtime, record.size_bytes)) {
            slots[i].descriptor = std::move(cached);
            slots[i].hit = true;
        } else {
            try {
                slots[i].descriptor = describe(decode(record));
                slots[i].fresh = true;
            } catch (const DecodeError&) {
                record.undecodable = true;
            }
        }
        if (options.progress) ++options.progress->done;
    });
    corpus.stats.features_ms = elapsed_ms(features_start);

    const auto store_start = Clock::now();
    for (std::size_t i = 0; i < records.size(); ++i) {
        Slot& slot = slots[i];
        if (slot.hit) ++corpus.stats.cache_hits;
        else ++corpus.stats.cache_misses;
        if (slot.fresh) ++corpus.stats.decoded;
        if (records[i].undecodable) ++corpus.stats.undecodable;
        if (!slot.descriptor) continue;

        bool changed = slot.fresh;
        if (corpus.projection) {
            const auto row = options.embeddings->rows.find(records[i].id);
            if (row != options.embeddings->rows.end()) {
                Projected projected = project(*corpus.projection, row->second);
                Eigen::VectorXf embed = Eigen::VectorXf::Zero(kEmbedDim);
                embed.head(projected.values.size()) = projected.values;
                const Eigen::VectorXf stored = dequantize(quantize(embed));
                const auto& current = slot.descriptor->part(Part::embed);
                if (current.size() != stored.size() || current != stored) {
                    slot.descriptor->set_part(Part::embed, embed);
                    changed = true;
                }
            }
        }

        // Search and sort always run on the stored (quantized) form.
        IndexEntry entry = IndexEntry::from_descriptor(raw_ids[i], records[i].mtime, records[i].size_bytes,
                                                       *slot.descriptor);
        Descriptor stored = entry.descriptor();
        if (changed) index.upsert(std::move(entry));
        corpus.descriptors.insert_or_assign(records[i].id, std::move(stored));
    }
    corpus.stats.store_ms = elapsed_ms(store_start);
    corpus.records = std::move(records);
    return corpus;
}

}  // namespace gridsight
