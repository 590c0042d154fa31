#include "gridsight/features.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "gridsight/error.hpp"

namespace gridsight {

namespace {

// DCT magnitudes below this are round-off from flat regions.
constexpr double kDctFloor = 1e-9;

const Eigen::MatrixXd& dct_matrix(int n) {
    thread_local std::unordered_map<int, Eigen::MatrixXd> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Eigen::MatrixXd d(n, n);
    for (int k = 0; k < n; ++k) {
        const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) d(k, i) = alpha * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
    return cache.emplace(n, std::move(d)).first->second;
}

}  // namespace

std::string_view part_name(Part p) {
    switch (p) {
        case Part::color:
            return "color";
        case Part::edge:
            return "edge";
        case Part::freq:
            return "freq";
        case Part::embed:
            return "embed";
    }
    return "?";
}

void Descriptor::set_part(Part p, Eigen::VectorXf values) {
    const auto bit = static_cast<std::uint8_t>(1u << static_cast<int>(p));
    const bool zero = (values.array() == 0.0f).all();
    degenerate = zero ? (degenerate | bit) : (degenerate & ~bit);
    parts[static_cast<std::size_t>(p)] = std::move(values);
}

void Descriptor::clear_part(Part p) {
    parts[static_cast<std::size_t>(p)].resize(0);
    degenerate &= static_cast<std::uint8_t>(~(1u << static_cast<int>(p)));
}

double WeightProfile::weight(Part p) const {
    switch (p) {
        case Part::color:
            return w_color;
        case Part::edge:
            return w_edge;
        case Part::freq:
            return w_freq;
        case Part::embed:
            return w_embed;
    }
    return 0.0;
}

std::array<double, kPartCount> WeightProfile::normalized(bool has_embed) const {
    std::array<double, kPartCount> w{};
    for (Part p : kParts) {
        const double v = weight(p);
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights must be finite and >= 0");
        w[static_cast<std::size_t>(p)] = v;
    }
    if (!has_embed) w[static_cast<std::size_t>(Part::embed)] = 0.0;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("weight profile has no positive weight for the available parts");
    for (double& v : w) v /= total;
    return w;
}

template <typename Scalar>
VectorX<Scalar> color_histogram(const PixelBuffer& pixels) {
    Eigen::VectorXd bins = Eigen::VectorXd::Zero(kHueBins * kSatBins * kValBins);
    for (int r = 0; r < pixels.rows; ++r) {
        for (int c = 0; c < pixels.cols; ++c) {
            const auto* p = pixels.px(r, c);
            const double red = p[0] / 255.0, green = p[1] / 255.0, blue = p[2] / 255.0;
            const double hi = std::max({red, green, blue});
            const double lo = std::min({red, green, blue});
            const double delta = hi - lo;
            const double sat = hi > 0.0 ? delta / hi : 0.0;

            double hue6 = 0.0;  // hue in sextants, [0, 6)
            if (delta > 0.0) {
                if (hi == red) hue6 = std::fmod((green - blue) / delta + 6.0, 6.0);
                else if (hi == green) hue6 = (blue - red) / delta + 2.0;
                else hue6 = (red - green) / delta + 4.0;
            }
            const double base = std::floor(hue6);
            const double frac = hue6 - base;
            const int h0 = static_cast<int>(base) % kHueBins;
            const int h1 = (h0 + 1) % kHueBins;
            const int s = std::min(kSatBins - 1, static_cast<int>(sat * kSatBins));
            const int v = std::min(kValBins - 1, static_cast<int>(hi * kValBins));
            bins[(h0 * kSatBins + s) * kValBins + v] += 1.0 - frac;
            bins[(h1 * kSatBins + s) * kValBins + v] += frac;
        }
    }
    return hellinger(bins).template cast<Scalar>();
}

template <typename Scalar>
VectorX<Scalar> edge_histogram(const PixelBuffer& pixels) {
    const Eigen::MatrixXd y = luma(pixels);
    const Eigen::Index rows = y.rows(), cols = y.cols();

    // Central differences, one-sided (replicated border) at the edges.
    Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd gy = Eigen::MatrixXd::Zero(rows, cols);
    if (cols > 1) {
        if (cols > 2) gx.middleCols(1, cols - 2) = (y.rightCols(cols - 2) - y.leftCols(cols - 2)) / 2.0;
        gx.col(0) = (y.col(1) - y.col(0)) / 2.0;
        gx.col(cols - 1) = (y.col(cols - 1) - y.col(cols - 2)) / 2.0;
    }
    if (rows > 1) {
        if (rows > 2) gy.middleRows(1, rows - 2) = (y.bottomRows(rows - 2) - y.topRows(rows - 2)) / 2.0;
        gy.row(0) = (y.row(1) - y.row(0)) / 2.0;
        gy.row(rows - 1) = (y.row(rows - 1) - y.row(rows - 2)) / 2.0;
    }
    const Eigen::MatrixXd magnitude = (gx.array().square() + gy.array().square()).sqrt().matrix();

    constexpr double width = std::numbers::pi / kOrientationBins;
    Eigen::VectorXd bins = Eigen::VectorXd::Zero(kEdgeCells * kOrientationBins);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index cell_r = r * 2 / rows;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double m = magnitude(r, c);
            if (m == 0.0) continue;
            double theta = std::atan2(gy(r, c), gx(r, c));
            if (theta < 0.0) theta += std::numbers::pi;
            if (theta >= std::numbers::pi) theta -= std::numbers::pi;
            const int bin = std::min(kOrientationBins - 1, static_cast<int>(theta / width));
            const Eigen::Index cell = cell_r * 2 + c * 2 / cols;
            bins[cell * kOrientationBins + bin] += m;
            bins[4 * kOrientationBins + bin] += m;
        }
    }
    return hellinger(bins).template cast<Scalar>();
}

Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane) {
    const auto& dr = dct_matrix(static_cast<int>(plane.rows()));
    const auto& dc = dct_matrix(static_cast<int>(plane.cols()));
    return dr * plane * dc.transpose();
}

const std::array<std::pair<int, int>, 21>& frequency_coefficients() {
    static const auto table = [] {
        std::array<std::pair<int, int>, 21> t{};
        std::size_t k = 0;
        for (int diagonal = 1; k < t.size(); ++diagonal)
            for (int v = 0; v <= diagonal && k < t.size(); ++v) t[k++] = {diagonal - v, v};
        return t;
    }();
    return table;
}

template <typename Scalar>
VectorX<Scalar> frequency_features_from_luma(const Eigen::MatrixXd& plane) {
    const Eigen::MatrixXd square = plane.rows() == kDctSize && plane.cols() == kDctSize
                                       ? plane
                                       : resample_area(plane, kDctSize, kDctSize);
    const Eigen::MatrixXd coeffs = dct2(square);
    const auto& picks = frequency_coefficients();
    Eigen::VectorXd out(static_cast<Eigen::Index>(picks.size()));
    for (std::size_t k = 0; k < picks.size(); ++k) {
        const double mag = std::abs(coeffs(picks[k].second, picks[k].first));
        out[static_cast<Eigen::Index>(k)] = mag < kDctFloor ? 0.0 : std::log1p(mag);
    }
    const double norm = out.norm();
    if (norm > 0.0) out /= norm;
    return out.template cast<Scalar>();
}

template <typename Scalar>
VectorX<Scalar> frequency_features(const PixelBuffer& pixels) {
    return frequency_features_from_luma<Scalar>(luma(pixels));
}

template VectorX<float> color_histogram<float>(const PixelBuffer&);
template VectorX<double> color_histogram<double>(const PixelBuffer&);
template VectorX<float> edge_histogram<float>(const PixelBuffer&);
template VectorX<double> edge_histogram<double>(const PixelBuffer&);
template VectorX<float> frequency_features<float>(const PixelBuffer&);
template VectorX<double> frequency_features<double>(const PixelBuffer&);
template VectorX<float> frequency_features_from_luma<float>(const Eigen::MatrixXd&);
template VectorX<double> frequency_features_from_luma<double>(const Eigen::MatrixXd&);

Descriptor describe(const PixelBuffer& pixels) {
    if (pixels.empty()) throw std::invalid_argument("cannot describe an empty image");
    Descriptor d;
    d.set_part(Part::color, color_histogram<float>(pixels));
    d.set_part(Part::edge, edge_histogram<float>(pixels));
    d.set_part(Part::freq, frequency_features<float>(pixels));
    return d;
}

Eigen::VectorXf combine(const Descriptor& descriptor, const WeightProfile& profile) {
    const auto weights = profile.normalized(descriptor.has(Part::embed));
    Eigen::VectorXf out = Eigen::VectorXf::Zero(kCombinedDim);
    for (Part p : kParts) {
        if (!descriptor.has(p)) continue;
        const auto& values = descriptor.part(p);
        if (values.size() > part_dim(p)) throw DimensionMismatch(part_dim(p), values.size());
        out.segment(part_offset(p), values.size()) =
            static_cast<float>(std::sqrt(weights[static_cast<std::size_t>(p)])) * values;
    }
    return out;
}

Eigen::MatrixXf combine_all(std::span<const Descriptor> descriptors, const WeightProfile& profile) {
    Eigen::MatrixXf out(static_cast<Eigen::Index>(descriptors.size()), kCombinedDim);
    for (std::size_t i = 0; i < descriptors.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = combine(descriptors[i], profile).transpose();
    return out;
}

double average_precision(std::span<const bool> ranked_relevance) {
    double hits = 0.0, total = 0.0;
    for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
        if (!ranked_relevance[k]) continue;
        hits += 1.0;
        total += hits / static_cast<double>(k + 1);
    }
    return hits > 0.0 ? total / hits : 0.0;
}

double evaluate_map(const Eigen::MatrixXd& distances, std::span<const int> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (distances.rows() != n || distances.cols() != n) throw DimensionMismatch(n, distances.rows());

    std::unordered_map<int, int> members;
    for (int label : labels) ++members[label];
    if (members.size() < 2) throw InsufficientLabels("need at least two labels");
    for (const auto& [label, size] : members)
        if (size < 2) throw InsufficientLabels("label " + std::to_string(label) + " has fewer than two members");

    double sum = 0.0;
    std::vector<Eigen::Index> order;
    std::unique_ptr<bool[]> relevance(new bool[static_cast<std::size_t>(n)]);
    for (Eigen::Index q = 0; q < n; ++q) {
        order.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != q) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (distances(q, a) != distances(q, b)) return distances(q, a) < distances(q, b);
            return a < b;
        });
        for (std::size_t k = 0; k < order.size(); ++k) relevance[k] = labels[order[k]] == labels[q];
        sum += average_precision({relevance.get(), order.size()});
    }
    return sum / static_cast<double>(n);
}

double evaluate_map(std::span<const Descriptor> descriptors, std::span<const int> labels,
                    const WeightProfile& profile) {
    if (descriptors.size() != labels.size())
        throw DimensionMismatch(static_cast<long>(labels.size()), static_cast<long>(descriptors.size()));
    const Eigen::MatrixXd x = combine_all(descriptors, profile).cast<double>();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    return evaluate_map(d, labels);
}

}  // namespace gridsight
