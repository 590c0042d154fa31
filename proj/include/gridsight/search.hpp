#ifndef GRIDSIGHT_SEARCH_HPP
#define GRIDSIGHT_SEARCH_HPP

#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "gridsight/features.hpp"

namespace gridsight {

using DescriptorMap = std::unordered_map<std::string, Descriptor>;

struct QuerySet {
    std::vector<std::string> query_ids;  ///< ordered, no duplicates
    std::vector<std::string> scope_ids;
    WeightProfile profile = WeightProfile::search();
};

struct Ranked {
    std::string id;
    double distance = 0.0;
    bool operator==(const Ranked&) const = default;
};

/// For each candidate row, the smallest L2 distance to any query row.
template <typename DerivedC, typename DerivedQ>
Eigen::VectorXd min_query_distances(const Eigen::MatrixBase<DerivedC>& candidates,
                                    const Eigen::MatrixBase<DerivedQ>& queries) {
    Eigen::VectorXd out(candidates.rows());
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        const auto x = candidates.row(i).template cast<double>();
        for (Eigen::Index q = 0; q < queries.rows(); ++q)
            best = std::min(best, (x - queries.row(q).template cast<double>()).squaredNorm());
        out[i] = std::sqrt(best);
    }
    return out;
}

/// Candidates are scope_ids plus the queries themselves, deduplicated. Result
/// is ascending by min-over-queries distance, ties by id. Throws UnknownId
/// for any id without a descriptor and EmptyQuerySet for no queries.
std::vector<Ranked> rank(const QuerySet& queries, const DescriptorMap& descriptors);

/// Adds (appending, skipping ids already present) then removes. Scope and
/// profile carry over. Throws EmptyQuerySet if nothing remains.
QuerySet iterate(const QuerySet& previous, std::span<const std::string> add_ids,
                 std::span<const std::string> remove_ids);

/// Query ids that have no descriptor.
std::vector<std::string> unresolved_ids(const QuerySet& queries, const DescriptorMap& descriptors);

}  // namespace gridsight

#endif  // GRIDSIGHT_SEARCH_HPP
