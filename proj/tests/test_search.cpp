#include <doctest.h>

#include "fixtures.hpp"
#include "gridsight/error.hpp"
#include "gridsight/ids.hpp"
#include "gridsight/search.hpp"

using namespace gridsight;

namespace {

DescriptorMap random_map(int count, std::mt19937_64& rng, bool with_embed = true) {
    std::normal_distribution<float> g;
    DescriptorMap out;
    for (int i = 0; i < count; ++i) {
        Descriptor d;
        for (Part p : kParts) {
            if (p == Part::embed && !with_embed) continue;
            Eigen::VectorXf v(part_dim(p));
            for (auto& x : v) x = g(rng);
            d.set_part(p, v.normalized());
        }
        out.emplace(path_id("/corpus/" + std::to_string(i) + ".png"), std::move(d));
    }
    return out;
}

std::vector<std::string> keys(const DescriptorMap& map) {
    std::vector<std::string> out;
    for (const auto& [id, d] : map) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

// Double loop over candidates and queries with the combined vectors.
std::vector<Ranked> brute_force(const QuerySet& qs, const DescriptorMap& map) {
    std::vector<std::string> candidates = qs.scope_ids;
    candidates.insert(candidates.end(), qs.query_ids.begin(), qs.query_ids.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<Ranked> out;
    for (const auto& c : candidates) {
        const Eigen::VectorXf x = combine(map.at(c), qs.profile);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : qs.query_ids) {
            const Eigen::VectorXf y = combine(map.at(q), qs.profile);
            double sum = 0.0;
            for (Eigen::Index k = 0; k < x.size(); ++k) {
                const double diff = static_cast<double>(x[k]) - static_cast<double>(y[k]);
                sum += diff * diff;
            }
            best = std::min(best, std::sqrt(sum));
        }
        out.push_back({c, best});
    }
    std::stable_sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) { return a.distance < b.distance; });
    return out;
}

void check_same(const std::vector<Ranked>& got, const std::vector<Ranked>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(std::abs(got[i].distance - want[i].distance) < 1e-9);
    }
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("a query ranks itself first at distance zero") {
    std::mt19937_64 rng(1);
    const DescriptorMap map = random_map(20, rng);
    const auto ids = keys(map);
    const auto ranked = rank({.query_ids = {ids[7]}, .scope_ids = ids}, map);
    REQUIRE(ranked.size() == 20);
    CHECK(ranked[0].id == ids[7]);
    CHECK(ranked[0].distance == 0.0);
}

TEST_CASE("two queries score by the nearer one") {
    std::mt19937_64 rng(2);
    const DescriptorMap map = random_map(3, rng);
    const auto ids = keys(map);
    const QuerySet qs{.query_ids = {ids[0], ids[1]}, .scope_ids = {ids[2]}};
    const auto ranked = rank(qs, map);
    const auto x = combine(map.at(ids[2]), qs.profile);
    const double d1 = (x.cast<double>() - combine(map.at(ids[0]), qs.profile).cast<double>()).norm();
    const double d2 = (x.cast<double>() - combine(map.at(ids[1]), qs.profile).cast<double>()).norm();
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[2].id == ids[2]);
    CHECK(ranked[2].distance == doctest::Approx(std::min(d1, d2)).epsilon(1e-9));
}

TEST_CASE("full ranking matches the brute-force double loop") {
    std::mt19937_64 rng(3);
    const DescriptorMap map = random_map(50, rng, false);
    const auto ids = keys(map);
    const QuerySet qs{.query_ids = {ids[4], ids[17], ids[33]}, .scope_ids = ids};
    check_same(rank(qs, map), brute_force(qs, map));
}

TEST_CASE("queries outside the scope are still ranked") {
    std::mt19937_64 rng(4);
    const DescriptorMap map = random_map(10, rng);
    const auto ids = keys(map);
    const auto ranked = rank({.query_ids = {ids[0]}, .scope_ids = {ids[1], ids[2], ids[2]}}, map);
    CHECK(ranked.size() == 3);
    CHECK(ranked[0].id == ids[0]);
}

TEST_CASE("errors") {
    std::mt19937_64 rng(5);
    const DescriptorMap map = random_map(4, rng);
    const auto ids = keys(map);
    CHECK_THROWS_AS(rank({.query_ids = {}, .scope_ids = ids}, map), EmptyQuerySet);
    CHECK_THROWS_AS(rank({.query_ids = {"feedface"}, .scope_ids = ids}, map), UnknownId);
    CHECK_THROWS_AS(rank({.query_ids = {ids[0]}, .scope_ids = {"feedface"}}, map), UnknownId);
    const QuerySet qs{.query_ids = {ids[0], "missing"}};
    CHECK(unresolved_ids(qs, map) == std::vector<std::string>{"missing"});
}

TEST_CASE("iterative query edits") {
    std::mt19937_64 rng(6);
    const DescriptorMap map = random_map(12, rng);
    const auto ids = keys(map);
    const QuerySet base{.query_ids = {ids[0]}, .scope_ids = ids};

    SUBCASE("add then remove restores the set") {
        const std::string add[] = {ids[5]};
        const QuerySet grown = iterate(base, add, {});
        CHECK(grown.query_ids == std::vector<std::string>{ids[0], ids[5]});
        CHECK(iterate(grown, {}, add).query_ids == base.query_ids);
    }
    SUBCASE("adding a present id is a no-op") {
        const std::string add[] = {ids[0]};
        CHECK(iterate(base, add, {}).query_ids == base.query_ids);
    }
    SUBCASE("removing everything is an error") {
        const std::string remove[] = {ids[0]};
        CHECK_THROWS_AS(iterate(base, {}, remove), EmptyQuerySet);
    }
    SUBCASE("three adds rank like a fresh set") {
        QuerySet qs = base;
        for (int k : {3, 8, 11}) {
            const std::string add[] = {ids[k]};
            qs = iterate(qs, add, {});
        }
        const QuerySet fresh{.query_ids = {ids[0], ids[3], ids[8], ids[11]}, .scope_ids = ids};
        CHECK(rank(qs, map) == rank(fresh, map));
    }
}

TEST_CASE("ties rank by id") {
    std::mt19937_64 rng(7);
    DescriptorMap map = random_map(1, rng);
    const Descriptor d = map.begin()->second;
    map.clear();
    for (const char* id : {"cc", "aa", "bb"}) map.emplace(id, d);
    const auto ranked = rank({.query_ids = {"cc"}, .scope_ids = {"bb", "aa"}}, map);
    CHECK(ranked[0].id == "aa");
    CHECK(ranked[1].id == "bb");
    CHECK(ranked[2].id == "cc");
}

}
