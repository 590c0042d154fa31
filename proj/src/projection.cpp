#include "gridsight/projection.hpp"

#include <Eigen/Eigenvalues>

#include "byteio.hpp"
#include "gridsight/ids.hpp"
#include "gridsight/pixels.hpp"

namespace gridsight {

namespace {
constexpr std::array<std::uint8_t, 4> kEmbedMagic{'G', 'S', 'E', 'M'};
constexpr std::uint16_t kEmbedVersion = 1;
}  // namespace

ProjectionModel fit_projection(const Eigen::MatrixXd& embeddings) {
    const Eigen::Index rows = embeddings.rows();
    const Eigen::Index dim = embeddings.cols();
    if (rows < 2) throw DegenerateData("need at least two embeddings to fit a projection");
    if (dim < 1) throw DegenerateData("embeddings have no components");

    ProjectionModel model;
    model.input_dim = static_cast<int>(dim);
    model.output_dim = static_cast<int>(std::min<Eigen::Index>(kEmbedDim, dim));
    model.mean = embeddings.colwise().mean().transpose();

    const Eigen::MatrixXd centered = embeddings.rowwise() - model.mean.transpose();
    if (centered.cwiseAbs().maxCoeff() == 0.0) throw DegenerateData("all embeddings are identical");

    const Eigen::MatrixXd covariance = centered.transpose() * centered / static_cast<double>(rows - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success) throw DegenerateData("covariance eigendecomposition failed");

    // Eigenvalues come ascending; take the top output_dim in descending order.
    model.basis.resize(model.output_dim, dim);
    model.explained_variance.resize(model.output_dim);
    for (int k = 0; k < model.output_dim; ++k) {
        const Eigen::Index src = dim - 1 - k;
        Eigen::VectorXd direction = solver.eigenvectors().col(src);
        Eigen::Index pivot;
        direction.cwiseAbs().maxCoeff(&pivot);
        if (direction[pivot] < 0) direction = -direction;
        model.basis.row(k) = direction.transpose();
        model.explained_variance[k] = std::max(0.0, solver.eigenvalues()[src]);
    }
    return model;
}

Projected project(const ProjectionModel& model, const Eigen::VectorXd& embedding) {
    Eigen::VectorXd y = model.transform(embedding);
    const double norm = y.norm();
    Projected out;
    if (norm > 1e-12) {
        out.values = (y / norm).cast<float>();
    } else {
        out.values = Eigen::VectorXf::Zero(y.size());
        out.degenerate = true;
    }
    return out;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    byteio::Reader in(bytes);
    std::array<std::uint8_t, 4> magic{};
    in.take(magic);
    if (!in.ok() || magic != kEmbedMagic) throw IoError(path.string() + ": not an embedding sidecar");
    const auto version = in.u16();
    const auto dim = in.u32();
    const auto count = in.u64();
    if (!in.ok() || version != kEmbedVersion) throw IoError(path.string() + ": unsupported sidecar version");
    if (dim == 0 || count > in.remaining() / (16 + 4ull * dim))
        throw IoError(path.string() + ": sidecar header does not match its size");

    EmbeddingTable table;
    table.input_dim = static_cast<int>(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        RawId id{};
        in.take(id);
        Eigen::VectorXd row(dim);
        for (std::uint32_t k = 0; k < dim; ++k) row[k] = in.f32();
        table.rows.insert_or_assign(to_hex(id), std::move(row));
    }
    if (!in.ok()) throw IoError(path.string() + ": truncated sidecar");
    return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
    std::vector<std::uint8_t> bytes;
    byteio::Writer out(bytes);
    out.bytes(kEmbedMagic);
    out.u16(kEmbedVersion);
    out.u32(static_cast<std::uint32_t>(table.input_dim));
    out.u64(table.rows.size());
    for (const auto& [hex, row] : table.rows) {
        const auto id = from_hex(hex);
        if (!id) throw IoError("embedding id is not a 32-digit hex digest: " + hex);
        if (row.size() != table.input_dim) throw DimensionMismatch(table.input_dim, row.size());
        out.bytes(*id);
        for (Eigen::Index k = 0; k < row.size(); ++k) out.f32(static_cast<float>(row[k]));
    }
    write_file_bytes(path, bytes);
}

}  // namespace gridsight
