#ifndef GRIDSIGHT_PROJECTION_HPP
#define GRIDSIGHT_PROJECTION_HPP

#include <filesystem>
#include <string>
#include <unordered_map>

#include <Eigen/Core>

#include "gridsight/error.hpp"

namespace gridsight {

inline constexpr int kEmbedDim = 64;

/// Linear compression of raw embeddings: centred then projected onto the
/// leading principal directions.
struct ProjectionModel {
    int input_dim = 0;
    int output_dim = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd basis;               ///< output_dim x input_dim, orthonormal rows
    Eigen::VectorXd explained_variance;  ///< non-increasing

    /// basis * (x - mean). Throws DimensionMismatch.
    template <typename Derived>
    Eigen::VectorXd transform(const Eigen::MatrixBase<Derived>& x) const;
};

/// Principal directions of the rows of `embeddings`. Output dimension is
/// min(64, input_dim). Throws DegenerateData when fewer than two rows or all
/// rows coincide.
ProjectionModel fit_projection(const Eigen::MatrixXd& embeddings);

struct Projected {
    Eigen::VectorXf values;
    bool degenerate = false;
};

/// transform() followed by L2 normalization.
Projected project(const ProjectionModel& model, const Eigen::VectorXd& embedding);

/// Raw embeddings keyed by hex id, as read from a sidecar file.
struct EmbeddingTable {
    int input_dim = 0;
    std::unordered_map<std::string, Eigen::VectorXd> rows;
};

/// Sidecar layout (little-endian): "GSEM", u16 version, u32 input_dim,
/// u64 count, then count x (16-byte id, f32[input_dim]).
EmbeddingTable read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

template <typename Derived>
Eigen::VectorXd ProjectionModel::transform(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != input_dim) throw DimensionMismatch(input_dim, x.size());
    return basis * (x.template cast<double>() - mean);
}

}  // namespace gridsight

#endif  // GRIDSIGHT_PROJECTION_HPP
