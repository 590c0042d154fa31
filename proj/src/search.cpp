#include "gridsight/search.hpp"

#include <algorithm>
#include <unordered_set>

#include "gridsight/error.hpp"

namespace gridsight {

std::vector<Ranked> rank(const QuerySet& queries, const DescriptorMap& descriptors) {
    if (queries.query_ids.empty()) throw EmptyQuerySet();

    auto resolve = [&](const std::string& id) -> const Descriptor& {
        const auto it = descriptors.find(id);
        if (it == descriptors.end()) throw UnknownId(id);
        return it->second;
    };

    Eigen::MatrixXf query_vectors(static_cast<Eigen::Index>(queries.query_ids.size()), kCombinedDim);
    for (std::size_t q = 0; q < queries.query_ids.size(); ++q)
        query_vectors.row(static_cast<Eigen::Index>(q)) = combine(resolve(queries.query_ids[q]), queries.profile);

    std::vector<std::string> candidates;
    std::unordered_set<std::string> seen;
    candidates.reserve(queries.scope_ids.size() + queries.query_ids.size());
    for (const auto* list : {&queries.query_ids, &queries.scope_ids})
        for (const auto& id : *list)
            if (seen.insert(id).second) candidates.push_back(id);

    Eigen::MatrixXf candidate_vectors(static_cast<Eigen::Index>(candidates.size()), kCombinedDim);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        candidate_vectors.row(static_cast<Eigen::Index>(i)) = combine(resolve(candidates[i]), queries.profile);

    const Eigen::VectorXd scores = min_query_distances(candidate_vectors, query_vectors);

    std::vector<Ranked> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out[i] = {std::move(candidates[i]), scores[static_cast<Eigen::Index>(i)]};
    std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    return out;
}

QuerySet iterate(const QuerySet& previous, std::span<const std::string> add_ids,
                 std::span<const std::string> remove_ids) {
    QuerySet next = previous;
    for (const auto& id : add_ids)
        if (std::find(next.query_ids.begin(), next.query_ids.end(), id) == next.query_ids.end())
            next.query_ids.push_back(id);
    for (const auto& id : remove_ids) std::erase(next.query_ids, id);
    if (next.query_ids.empty()) throw EmptyQuerySet();
    return next;
}

std::vector<std::string> unresolved_ids(const QuerySet& queries, const DescriptorMap& descriptors) {
    std::vector<std::string> out;
    for (const auto& id : queries.query_ids)
        if (!descriptors.contains(id)) out.push_back(id);
    return out;
}

}  // namespace gridsight
