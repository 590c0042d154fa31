#ifndef GRIDSIGHT_INDEXER_HPP
#define GRIDSIGHT_INDEXER_HPP

#include <atomic>
#include <cstddef>
#include <optional>
#include <vector>

#include "gridsight/imgscan.hpp"
#include "gridsight/projection.hpp"
#include "gridsight/search.hpp"
#include "gridsight/store.hpp"

namespace gridsight {

struct IndexStats {
    std::size_t records = 0;
    std::size_t decoded = 0;
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::size_t undecodable = 0;
    double features_ms = 0.0;  ///< descriptor acquisition: lookups plus decode and extraction
    double store_ms = 0.0;

    double hit_ratio() const {
        return records == 0 ? 1.0 : static_cast<double>(cache_hits) / static_cast<double>(records);
    }
};

struct IndexProgress {
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> total{0};

    double fraction() const {
        const auto t = total.load();
        return t == 0 ? 1.0 : static_cast<double>(done.load()) / static_cast<double>(t);
    }
};

struct IndexOptions {
    const EmbeddingTable* embeddings = nullptr;
    IndexProgress* progress = nullptr;
    const std::atomic<bool>* cancel = nullptr;
};

struct IndexedCorpus {
    std::vector<ImageRecord> records;  ///< undecodable files stay listed, flagged
    DescriptorMap descriptors;         ///< dequantized, as stored
    IndexStats stats;
    std::optional<ProjectionModel> projection;
};

/// Resolves a descriptor for every record, reusing the index where the file
/// is unchanged and decoding otherwise. New and changed entries are upserted
/// but not checkpointed.
IndexedCorpus index_records(std::vector<ImageRecord> records, FeatureIndex& index, const IndexOptions& options = {});

}  // namespace gridsight

#endif  // GRIDSIGHT_INDEXER_HPP
