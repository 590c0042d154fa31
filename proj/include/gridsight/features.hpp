#ifndef GRIDSIGHT_FEATURES_HPP
#define GRIDSIGHT_FEATURES_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gridsight/pixels.hpp"

namespace gridsight {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Part : std::uint8_t { color = 0, edge = 1, freq = 2, embed = 3 };

inline constexpr std::size_t kPartCount = 4;
inline constexpr std::array<Part, kPartCount> kParts{Part::color, Part::edge, Part::freq, Part::embed};
inline constexpr std::array<int, kPartCount> kPartDims{54, 40, 21, 64};
inline constexpr int kCombinedDim = 54 + 40 + 21 + 64;

inline constexpr int kHueBins = 6;
inline constexpr int kSatBins = 3;
inline constexpr int kValBins = 3;
inline constexpr int kOrientationBins = 8;
inline constexpr int kEdgeCells = 5;
inline constexpr int kDctSize = 32;

constexpr int part_dim(Part p) { return kPartDims[static_cast<std::size_t>(p)]; }
constexpr int part_offset(Part p) {
    int offset = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(p); ++i) offset += kPartDims[i];
    return offset;
}
std::string_view part_name(Part p);

/// Per-image feature parts. Each present part is L2-normalized; an all-zero
/// part is kept as zeros and flagged degenerate. `embed` may be absent.
struct Descriptor {
    std::array<Eigen::VectorXf, kPartCount> parts;
    std::uint8_t degenerate = 0;

    bool has(Part p) const { return parts[static_cast<std::size_t>(p)].size() > 0; }
    bool is_degenerate(Part p) const { return (degenerate >> static_cast<int>(p)) & 1u; }
    const Eigen::VectorXf& part(Part p) const { return parts[static_cast<std::size_t>(p)]; }

    /// Stores `values` (already normalized or all-zero) and updates the degenerate flag.
    void set_part(Part p, Eigen::VectorXf values);
    void clear_part(Part p);
};

struct WeightProfile {
    enum class Purpose { search, sort };

    double w_embed = 0.0;
    double w_color = 0.0;
    double w_edge = 0.0;
    double w_freq = 0.0;
    Purpose purpose = Purpose::search;

    static WeightProfile search() { return {0.70, 0.15, 0.10, 0.05, Purpose::search}; }
    static WeightProfile sort() { return {0.40, 0.40, 0.10, 0.10, Purpose::sort}; }

    double weight(Part p) const;

    /// Weights summing to 1. Without an embedding its weight is spread over
    /// the other parts in proportion to theirs. Throws std::invalid_argument
    /// on negative weights or when nothing is left to weight.
    std::array<double, kPartCount> normalized(bool has_embed) const;
};

/// 6 hue x 3 saturation x 3 value HSV histogram, soft-assigned on hue with
/// bin centres at 0, 60, ..., 300 degrees, then Hellinger-mapped.
template <typename Scalar>
VectorX<Scalar> color_histogram(const PixelBuffer& pixels);

/// Gradient-orientation histograms (8 unsigned orientations, magnitude
/// weighted) over a 2x2 grid plus the whole image, Hellinger-mapped.
template <typename Scalar>
VectorX<Scalar> edge_histogram(const PixelBuffer& pixels);

/// Log magnitudes of 21 low-frequency DCT coefficients of the 32x32 luma.
template <typename Scalar>
VectorX<Scalar> frequency_features(const PixelBuffer& pixels);

/// Same as frequency_features on an already-prepared luma plane.
template <typename Scalar>
VectorX<Scalar> frequency_features_from_luma(const Eigen::MatrixXd& luma);

/// Orthonormal 2-D DCT-II. Entry (v, u) holds vertical frequency v and horizontal frequency u.
Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane);

/// (horizontal u, vertical v) pairs read by frequency_features: AC terms by
/// increasing u+v, vertical frequency ascending within a diagonal.
const std::array<std::pair<int, int>, 21>& frequency_coefficients();

/// Hellinger mapping: L1-normalize, square root, L2-normalize. All-zero input stays zero.
template <typename Derived>
auto hellinger(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    VectorX<Scalar> out = v;
    const Scalar total = out.template lpNorm<1>();
    if (total <= Scalar(0)) return VectorX<Scalar>(VectorX<Scalar>::Zero(out.size()));
    out = (out.array().abs() / total).sqrt().matrix();
    const Scalar norm = out.norm();
    if (norm > Scalar(0)) out /= norm;
    return out;
}

/// Computes the colour, edge and frequency parts.
Descriptor describe(const PixelBuffer& pixels);

/// Concatenates sqrt(w_p) * part_p in part order into a kCombinedDim vector.
/// Absent parts occupy zeros.
Eigen::VectorXf combine(const Descriptor& descriptor, const WeightProfile& profile);

/// One combined vector per row.
Eigen::MatrixXf combine_all(std::span<const Descriptor> descriptors, const WeightProfile& profile);

/// Leave-one-out mean average precision over a precomputed distance matrix.
/// Ties are ranked by item index. Throws InsufficientLabels unless there are
/// at least two labels and every label has at least two members.
double evaluate_map(const Eigen::MatrixXd& distances, std::span<const int> labels);

double evaluate_map(std::span<const Descriptor> descriptors, std::span<const int> labels,
                    const WeightProfile& profile);

/// Average precision of one ranked relevance list (true = relevant).
double average_precision(std::span<const bool> ranked_relevance);

}  // namespace gridsight

#endif  // GRIDSIGHT_FEATURES_HPP
