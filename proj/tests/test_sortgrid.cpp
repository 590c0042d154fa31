#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"
#include "gridsight/sortgrid.hpp"

using namespace gridsight;

namespace {

Eigen::MatrixXd random_features(int count, int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd f(count, dim);
    for (auto& v : f.reshaped()) v = g(rng);
    return f;
}

GridLayout shuffled(int count, int columns, std::mt19937_64& rng) {
    GridLayout layout = GridLayout::scanline(count, columns);
    std::shuffle(layout.cells.begin(), layout.cells.begin() + count, rng);
    return layout;
}

Eigen::MatrixXd hue_circle(int count) {
    Eigen::MatrixXd f(count, 2);
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * 3.141592653589793 * i / count;
        f(i, 0) = std::cos(a);
        f(i, 1) = std::sin(a);
    }
    return f;
}

}  // namespace

TEST_SUITE("sortgrid") {

TEST_CASE("grid shapes") {
    SUBCASE("28 on 5 columns") {
        const GridLayout g = GridLayout::scanline(28, 5);
        CHECK(g.rows == 6);
        CHECK(std::count(g.cells.begin(), g.cells.end(), kEmpty) == 2);
        CHECK(g.cells[27] == 27);
        const auto shape = valid_shape(28, 5);
        CHECK(shape.size() == 28);
        CHECK(std::count_if(shape.begin(), shape.end(), [](GridPos p) { return p.row == 5; }) == 3);
    }
    SUBCASE("exact multiple") {
        const GridLayout g = GridLayout::scanline(6, 3);
        CHECK(g.rows == 2);
        CHECK(std::count(g.cells.begin(), g.cells.end(), kEmpty) == 0);
    }
    SUBCASE("single item") {
        const auto shape = valid_shape(1, 7);
        REQUIRE(shape.size() == 1);
        CHECK(shape[0] == GridPos{0, 0});
        CHECK(GridLayout::scanline(1, 7).rows == 1);
    }
    SUBCASE("empty") {
        const GridLayout g = GridLayout::scanline(0, 4);
        CHECK(g.rows == 0);
        CHECK(g.cells.empty());
        CHECK(g.satisfies_invariants());
    }
}

TEST_CASE("invariant checker rejects broken layouts") {
    GridLayout g = GridLayout::scanline(7, 3);
    CHECK(g.satisfies_invariants());
    std::swap(g.cells[6], g.cells[7]);
    CHECK_FALSE(g.satisfies_invariants());
    g = GridLayout::scanline(7, 3);
    g.cells[0] = 1;
    CHECK_FALSE(g.satisfies_invariants());
}

TEST_CASE("clamping onto the shape") {
    CHECK(clamp_to_shape({-2, -1}, 28, 5) == GridPos{0, 0});
    CHECK(clamp_to_shape({5, 4}, 28, 5) == GridPos{5, 2});
    CHECK(clamp_to_shape({9, 9}, 28, 5) == GridPos{5, 2});
    CHECK(clamp_to_shape({4, 9}, 28, 5) == GridPos{4, 4});
    for (const GridPos p : valid_shape(28, 5)) CHECK(clamp_to_shape(p, 28, 5) == p);
}

TEST_CASE("neighbourhood mean of a constant field") {
    Eigen::MatrixXd f(13, 3);
    f.rowwise() = Eigen::RowVector3d(0.5, -1.0, 2.0);
    const GridLayout g = GridLayout::scanline(13, 4);
    for (int radius : {1, 2, 5})
        for (const GridPos p : valid_shape(13, 4))
            CHECK((neighborhood_mean(g, f, p, radius) - f.row(0).transpose()).norm() < 1e-12);
}

TEST_CASE("corner neighbourhood duplicates border cells") {
    Eigen::MatrixXd f(9, 1);
    for (int i = 0; i < 9; ++i) f(i, 0) = i;
    const GridLayout g = GridLayout::scanline(9, 3);
    // (0,0) counted 4 times, (0,1) and (1,0) twice, (1,1) once.
    const double expected = (4 * 0 + 2 * 1 + 2 * 3 + 1 * 4) / 9.0;
    CHECK(neighborhood_mean(g, f, {0, 0}, 1)[0] == doctest::Approx(expected));
}

TEST_CASE("fast neighbourhood means agree with direct enumeration") {
    std::mt19937_64 rng(6);
    for (auto [count, columns] : {std::pair{28, 5}, std::pair{9, 3}, std::pair{17, 17}, std::pair{5, 1},
                                  std::pair{64, 8}, std::pair{23, 6}}) {
        const Eigen::MatrixXd f = random_features(count, 4, rng);
        const GridLayout layout = shuffled(count, columns, rng);
        const int big = std::max(columns, layout.rows) + 2;
        for (int radius : {1, 2, 3, big}) {
            const Eigen::MatrixXd fast = detail::neighborhood_means(layout, f, radius);
            for (int s = 0; s < count; ++s) {
                const Eigen::VectorXd slow = neighborhood_mean(layout, f, {s / columns, s % columns}, radius);
                CHECK((fast.row(s).transpose() - slow).norm() < 1e-10);
            }
        }
    }
}

TEST_CASE("sortedness basics") {
    Eigen::MatrixXd same = Eigen::MatrixXd::Ones(6, 3);
    CHECK(sortedness(GridLayout::scanline(6, 3), same) == 0.0);
    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 3, 4;
    CHECK(sortedness(GridLayout::scanline(2, 2), two) == doctest::Approx(5.0));
    CHECK(sortedness(GridLayout::scanline(1, 3), two.topRows(1)) == 0.0);
}

TEST_CASE("sort of trivial inputs") {
    Eigen::MatrixXd one(1, 3);
    one << 1, 2, 3;
    const GridLayout g = ssm_sort(one, 7);
    CHECK(g == GridLayout::scanline(1, 7));
    CHECK(ssm_sort(Eigen::MatrixXd(0, 3), 4).count == 0);

    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(28, 5, 0.25);
    CHECK(ssm_sort(same, 5, {.seed = 3}).satisfies_invariants());
    CHECK_THROWS_AS(ssm_sort(same, 0), std::invalid_argument);
    CHECK_THROWS_AS(ssm_sort(same, 5, {.passes_per_stage = 0}), std::invalid_argument);
}

TEST_CASE("single column gives a valid vertical strip") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd f = random_features(12, 3, rng);
    const GridLayout g = ssm_sort(f, 1, {.seed = 1});
    CHECK(g.rows == 12);
    CHECK(g.satisfies_invariants());
}

TEST_CASE("same seed same layout") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd f = random_features(40, 6, rng);
    CHECK(ssm_sort(f, 7, {.seed = 11}) == ssm_sort(f, 7, {.seed = 11}));
}

TEST_CASE("starting placements") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd f = random_features(20, 4, rng);
    std::vector<GridLayout> seen;
    SortConfig config;
    config.seed = 5;
    config.starts = 3;
    config.on_start = [&](int start, const GridLayout& layout) {
        CHECK(start == static_cast<int>(seen.size()));
        seen.push_back(layout);
    };
    ssm_sort(f, 6, config);
    REQUIRE(seen.size() == 3);
    CHECK(seen[0] == GridLayout::scanline(20, 6));
    CHECK(seen[1] != seen[0]);
    CHECK(seen[2] != seen[1]);

    seen.clear();
    config.shuffle = true;
    ssm_sort(f, 6, config);
    CHECK(seen[0] != GridLayout::scanline(20, 6));
    CHECK(seen[0].satisfies_invariants());
    CHECK_THROWS_AS(ssm_sort(f, 6, {.starts = 0}), std::invalid_argument);
}

TEST_CASE("interactive start budget") {
    CHECK(starts_for(0) == 8);
    CHECK(starts_for(1000) == 8);
    CHECK(starts_for(2000) == 4);
    CHECK(starts_for(100000) == 1);
}

TEST_CASE("applied swaps reduce the frozen-target cost") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd f = random_features(50, 5, rng);
    int swaps = 0;
    SortConfig config;
    config.on_swap = [&](const SwapEvent& e) {
        ++swaps;
        CHECK(e.cost_after < e.cost_before);
        CHECK(e.size >= 2);
    };
    const GridLayout g = ssm_sort(f, 8, config);
    CHECK(swaps > 0);
    CHECK(g.satisfies_invariants());
}

TEST_CASE("exhaustive optimum lower-bounds the sorter") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd f = random_features(6, 3, rng);
        std::vector<int> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            GridLayout g = GridLayout::scanline(6, 3);
            std::copy(perm.begin(), perm.end(), g.cells.begin());
            best = std::min(best, sortedness(g, f));
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(best <= sortedness(ssm_sort(f, 3, {.seed = static_cast<std::uint64_t>(trial)}), f) + 1e-12);
    }
}

TEST_CASE("hue circle sorts far better than random placements") {
    const Eigen::MatrixXd f = hue_circle(64);
    std::mt19937_64 rng(8);
    double random_mean = 0.0, random_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const double s = sortedness(shuffled(64, 8, rng), f);
        random_mean += s / 100;
        random_best = std::min(random_best, s);
    }
    const double sorted = sortedness(ssm_sort(f, 8, {.seed = 1}), f);
    CHECK(sorted <= 0.6 * random_mean);
    CHECK(sorted <= random_best);
}

}
