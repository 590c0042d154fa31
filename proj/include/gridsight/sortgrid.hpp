#ifndef GRIDSIGHT_SORTGRID_HPP
#define GRIDSIGHT_SORTGRID_HPP

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "gridsight/features.hpp"

namespace gridsight {

inline constexpr int kEmpty = -1;

struct GridPos {
    int row = 0;
    int col = 0;
    bool operator==(const GridPos&) const = default;
};

constexpr int grid_rows(int count, int columns) {
    return count <= 0 || columns <= 0 ? 0 : (count + columns - 1) / columns;
}

/// Item indices on an N-column grid in scanline order. The first `count`
/// cells hold a permutation of 0..count-1; the tail of the last row is kEmpty.
struct GridLayout {
    int columns = 1;
    int rows = 0;
    int count = 0;
    std::vector<int> cells;

    static GridLayout scanline(int count, int columns);

    int at(int row, int col) const { return cells[static_cast<std::size_t>(row) * columns + col]; }
    int at(GridPos p) const { return at(p.row, p.col); }

    bool is_valid_cell(int row, int col) const {
        return row >= 0 && col >= 0 && col < columns && row * columns + col < count;
    }

    /// Bijection onto 0..count-1 with kEmpty only in the scanline tail.
    bool satisfies_invariants() const;

    bool operator==(const GridLayout&) const = default;
};

/// First `count` positions in scanline order of the ceil(count/columns)-row grid.
std::vector<GridPos> valid_shape(int count, int columns);

/// Constant continuation onto the scanline-filled shape: clamp to the
/// rectangle, then pull cells in the empty tail back to the last valid column
/// of the final row.
GridPos clamp_to_shape(GridPos position, int count, int columns);

/// Emitted for every applied (non-identity) swap-group permutation.
struct SwapEvent {
    int block = 0;
    int pass = 0;
    std::array<int, 4> cells{};  ///< scanline indices, first `size` used
    int size = 0;
    double cost_before = 0.0;  ///< squared distance to frozen targets, current occupants
    double cost_after = 0.0;   ///< same after applying the chosen permutation
};

struct SortConfig {
    std::uint64_t seed = 0;
    bool shuffle = false;  ///< shuffle the first start with `seed` instead of keeping input order
    int starts = 8;         ///< start k >= 1 is a shuffle with seed + k; the best result wins
    int passes_per_stage = 4;
    double neighborhood_radius_factor = 1.0;
    WeightProfile weight_profile = WeightProfile::sort();

    std::function<void(int start, const GridLayout&)> on_start;
    std::function<void(const SwapEvent&)> on_swap;
    std::function<void(int block, int pass, const GridLayout&)> on_pass;
    std::function<void(int block, const GridLayout&, double sortedness)> on_stage;
};

/// Start count for interactive sorting: 8 for small layouts, shrinking so
/// that starts * count stays near 8000, never below 1.
inline int starts_for(int count) { return std::clamp(8000 / std::max(count, 1), 1, 8); }

/// Mean of the (2r+1)^2 features around `position`, each sample read through
/// clamp_to_shape. Direct enumeration.
template <typename Derived>
VectorX<typename Derived::Scalar> neighborhood_mean(const GridLayout& layout,
                                                   const Eigen::MatrixBase<Derived>& features,
                                                   GridPos position, int radius) {
    using Scalar = typename Derived::Scalar;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(features.cols());
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            const GridPos q = clamp_to_shape({position.row + i, position.col + j}, layout.count, layout.columns);
            sum += features.row(layout.at(q)).transpose().template cast<double>();
        }
    }
    const double samples = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
    return (sum / samples).template cast<Scalar>();
}

/// Mean L2 distance over horizontally and vertically adjacent valid cells.
template <typename Derived>
double sortedness(const GridLayout& layout, const Eigen::MatrixBase<Derived>& features) {
    double total = 0.0;
    long pairs = 0;
    auto dist = [&](int a, int b) {
        return (features.row(a).template cast<double>() - features.row(b).template cast<double>()).norm();
    };
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.columns; ++c) {
            if (!layout.is_valid_cell(r, c)) continue;
            if (layout.is_valid_cell(r, c + 1)) {
                total += dist(layout.at(r, c), layout.at(r, c + 1));
                ++pairs;
            }
            if (layout.is_valid_cell(r + 1, c)) {
                total += dist(layout.at(r, c), layout.at(r + 1, c));
                ++pairs;
            }
        }
    }
    return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

namespace detail {

/// Row s is the neighborhood mean at scanline cell s, for every valid cell.
/// Separable box sums over the clamped field; O(rows * columns * dim).
template <typename Derived>
Eigen::MatrixXd neighborhood_means(const GridLayout& layout, const Eigen::MatrixBase<Derived>& features,
                                   int radius) {
    const int n = layout.columns;
    const int m = layout.rows;
    const long dim = features.cols();

    // Field over the full rectangle with tail cells continued from the last valid column.
    Eigen::MatrixXd field(static_cast<Eigen::Index>(m) * n, dim);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
            field.row(r * n + c) =
                features.row(layout.at(clamp_to_shape({r, c}, layout.count, n))).template cast<double>();

    auto box = [radius](const auto& line_at, int length, auto&& emit, long dim_) {
        Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(length + 1, dim_);
        for (int i = 0; i < length; ++i) prefix.row(i + 1) = prefix.row(i) + line_at(i);
        for (int i = 0; i < length; ++i) {
            const int lo = std::max(0, i - radius);
            const int hi = std::min(length - 1, i + radius);
            const int below = std::max(0, radius - i);
            const int above = std::max(0, i + radius - (length - 1));
            emit(i, prefix.row(hi + 1) - prefix.row(lo) + below * line_at(0) + above * line_at(length - 1));
        }
    };

    Eigen::MatrixXd horizontal(field.rows(), dim);
    for (int r = 0; r < m; ++r) {
        box([&](int c) { return field.row(r * n + c); }, n,
            [&](int c, const auto& v) { horizontal.row(r * n + c) = v; }, dim);
    }

    Eigen::MatrixXd means(layout.count, dim);
    const double samples = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
    for (int c = 0; c < n; ++c) {
        box([&](int r) { return horizontal.row(r * n + c); }, m,
            [&](int r, const auto& v) {
                const int s = r * n + c;
                if (s < layout.count) means.row(s) = v / samples;
            },
            dim);
    }
    return means;
}

/// All permutations of 0..size-1 in lexicographic order; identity first.
inline const std::vector<std::array<int, 4>>& permutations(int size) {
    static const auto table = [] {
        std::array<std::vector<std::array<int, 4>>, 5> t;
        for (int g = 0; g <= 4; ++g) {
            std::array<int, 4> p{0, 1, 2, 3};
            do {
                t[g].push_back(p);
            } while (std::next_permutation(p.begin(), p.begin() + g));
        }
        return t;
    }();
    return table[static_cast<std::size_t>(size)];
}

inline int initial_block(int columns, int rows) {
    const int extent = std::max(columns, rows);
    int block = 1;
    while (block * 2 < extent) block *= 2;
    return extent > 1 ? block : 0;
}

inline GridLayout shuffled_scanline(int count, int columns, std::uint64_t seed) {
    GridLayout layout = GridLayout::scanline(count, columns);
    std::mt19937_64 rng(seed);
    for (int i = count - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(layout.cells[i], layout.cells[j]);
    }
    return layout;
}

/// Runs every stage from `layout`, updating `best` after each stage.
template <typename Derived>
void ssm_stages(const Eigen::MatrixBase<Derived>& features, GridLayout layout, const SortConfig& config,
                GridLayout& best, double& best_score) {
    const int count = layout.count;
    const int n = layout.columns;
    std::array<int, 4> group{};
    Eigen::Matrix4d cost;

    for (int block = initial_block(n, layout.rows); block >= 1; block /= 2) {
        const int radius =
            std::max(1, static_cast<int>(std::lround(block * config.neighborhood_radius_factor)));

        for (int pass = 0; pass < config.passes_per_stage; ++pass) {
            const Eigen::MatrixXd targets = neighborhood_means(layout, features, radius);
            int improved = 0;

            for (int s = 0; s < count; ++s) {
                const int r = s / n;
                const int c = s % n;
                int size = 0;
                group[size++] = s;
                if (c + block < n && layout.is_valid_cell(r, c + block)) group[size++] = s + block;
                if (layout.is_valid_cell(r + block, c)) group[size++] = s + block * n;
                if (c + block < n && layout.is_valid_cell(r + block, c + block)) group[size++] = s + block * n + block;
                if (size < 2) continue;

                for (int i = 0; i < size; ++i) {
                    const auto occupant = features.row(layout.cells[group[i]]).template cast<double>();
                    for (int j = 0; j < size; ++j) cost(i, j) = (occupant - targets.row(group[j])).squaredNorm();
                }

                const auto& perms = permutations(size);
                auto perm_cost = [&](const std::array<int, 4>& p) {
                    double total = 0.0;
                    for (int j = 0; j < size; ++j) total += cost(p[j], j);
                    return total;
                };
                const double identity_cost = perm_cost(perms.front());
                double best_cost = identity_cost;
                std::size_t chosen = 0;
                for (std::size_t k = 1; k < perms.size(); ++k) {
                    if (const double pc = perm_cost(perms[k]); pc < best_cost) {
                        best_cost = pc;
                        chosen = k;
                    }
                }
                if (chosen == 0) continue;

                std::array<int, 4> occupants{};
                for (int j = 0; j < size; ++j) occupants[j] = layout.cells[group[j]];
                for (int j = 0; j < size; ++j) layout.cells[group[j]] = occupants[perms[chosen][j]];
                ++improved;

                if (config.on_swap) config.on_swap({block, pass, group, size, identity_cost, best_cost});
            }

            assert(layout.satisfies_invariants());
            if (config.on_pass) config.on_pass(block, pass, layout);
            if (improved == 0) break;
        }

        const double score = sortedness(layout, features);
        if (score < best_score) {
            best = layout;
            best_score = score;
        }
        if (config.on_stage) config.on_stage(block, layout, score);
    }
}

}  // namespace detail

/// Hierarchical self-sorting map over the scanline-filled shape.
///
/// Each stage uses a block offset b (largest power of two below
/// max(columns, rows), halving to 1). A pass freezes neighborhood-mean targets
/// and, for every valid cell, tries all permutations of the occupants of
/// {(r,c), (r,c+b), (r+b,c), (r+b,c+b)} restricted to valid cells, keeping the
/// one with the smallest squared distance to the targets. All stages run once
/// per start; the best layout by sortedness() seen after any stage of any
/// start is returned, including the input-order placement.
template <typename Derived>
GridLayout ssm_sort(const Eigen::MatrixBase<Derived>& features, int columns, const SortConfig& config = {}) {
    if (columns < 1) throw std::invalid_argument("columns must be >= 1");
    if (config.passes_per_stage < 1) throw std::invalid_argument("passes_per_stage must be >= 1");
    if (config.starts < 1) throw std::invalid_argument("starts must be >= 1");
    if (!(config.neighborhood_radius_factor > 0.0))
        throw std::invalid_argument("neighborhood_radius_factor must be positive");

    const int count = static_cast<int>(features.rows());
    GridLayout best = GridLayout::scanline(count, columns);
    if (count <= 1) return best;
    double best_score = sortedness(best, features);

    for (int start = 0; start < config.starts; ++start) {
        GridLayout layout = start == 0 && !config.shuffle
                                ? GridLayout::scanline(count, columns)
                                : detail::shuffled_scanline(count, columns, config.seed + static_cast<std::uint64_t>(start));
        if (const double score = sortedness(layout, features); score < best_score) {
            best = layout;
            best_score = score;
        }
        if (config.on_start) config.on_start(start, layout);
        detail::ssm_stages(features, std::move(layout), config, best, best_score);
    }
    return best;
}

}  // namespace gridsight

#endif  // GRIDSIGHT_SORTGRID_HPP
