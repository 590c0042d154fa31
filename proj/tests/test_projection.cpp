#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fixtures.hpp"
#include "gridsight/error.hpp"
#include "gridsight/ids.hpp"
#include "gridsight/projection.hpp"

using namespace gridsight;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (auto& v : m.reshaped()) v = g(rng);
    return m;
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("rank-one data puts all variance in the first component") {
    Eigen::Vector3d dir(1, 2, -2);
    dir.normalize();
    Eigen::MatrixXd data(40, 3);
    for (int i = 0; i < 40; ++i) data.row(i) = (0.1 * i - 2.0) * dir.transpose() + Eigen::RowVector3d(5, 5, 5);
    const ProjectionModel model = fit_projection(data);
    CHECK(model.output_dim == 3);
    const Eigen::RowVectorXd centered_var = (data.rowwise() - data.colwise().mean()).colwise().squaredNorm() / 39.0;
    CHECK(model.explained_variance[0] == doctest::Approx(centered_var.sum()));
    CHECK(std::abs(model.explained_variance[1]) < 1e-10);
    CHECK(std::abs(model.explained_variance[2]) < 1e-10);
    CHECK(std::abs(std::abs(model.basis.row(0).dot(dir)) - 1.0) < 1e-10);
}

TEST_CASE("basis is orthonormal and variance non-increasing") {
    for (auto [rows, cols] : {std::pair{200, 128}, std::pair{30, 10}, std::pair{10, 80}}) {
        const ProjectionModel model = fit_projection(gaussian(rows, cols, rows + cols));
        CHECK(model.output_dim == std::min(64, cols));
        const Eigen::MatrixXd gram = model.basis * model.basis.transpose();
        CHECK((gram - Eigen::MatrixXd::Identity(model.output_dim, model.output_dim)).cwiseAbs().maxCoeff() < 1e-6);
        for (int i = 1; i < model.output_dim; ++i)
            CHECK(model.explained_variance[i] <= model.explained_variance[i - 1] + 1e-12);
    }
}

TEST_CASE("explained variance matches singular values of the centred data") {
    const Eigen::MatrixXd data = gaussian(200, 128, 77);
    const ProjectionModel model = fit_projection(data);
    const Eigen::MatrixXd centred = data.rowwise() - data.colwise().mean();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
    for (int i = 0; i < model.output_dim; ++i) {
        const double expected = svd.singularValues()[i] * svd.singularValues()[i] / 199.0;
        CHECK(std::abs(model.explained_variance[i] - expected) <= 1e-5 * expected);
    }
}

TEST_CASE("projecting the mean is degenerate") {
    const ProjectionModel model = fit_projection(gaussian(20, 8, 3));
    const Projected p = project(model, model.mean);
    CHECK(p.degenerate);
    CHECK(p.values.isZero());
    CHECK_FALSE(project(model, model.mean + Eigen::VectorXd::Ones(8)).degenerate);
}

TEST_CASE("full-rank 64-d projection preserves distances") {
    const Eigen::MatrixXd data = gaussian(300, 64, 5);
    const ProjectionModel model = fit_projection(data);
    REQUIRE(model.output_dim == 64);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd a = data.row(i).transpose(), b = data.row(i + 20).transpose();
        CHECK(std::abs((model.transform(a) - model.transform(b)).norm() - (a - b).norm()) < 1e-5);
    }
}

TEST_CASE("projection never expands distances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::MatrixXd data = gaussian(50, 100, seed);
        const ProjectionModel model = fit_projection(data);
        for (int i = 0; i + 1 < 50; i += 3) {
            const Eigen::VectorXd a = data.row(i).transpose(), b = data.row(i + 1).transpose();
            CHECK((model.transform(a) - model.transform(b)).norm() <= (a - b).norm() + 1e-6);
        }
    }
}

TEST_CASE("fit and transform errors") {
    CHECK_THROWS_AS(fit_projection(gaussian(1, 5, 1)), DegenerateData);
    CHECK_THROWS_AS(fit_projection(Eigen::MatrixXd::Constant(10, 4, 2.5)), DegenerateData);
    const ProjectionModel model = fit_projection(gaussian(10, 4, 2));
    CHECK_THROWS_AS(model.transform(Eigen::VectorXd::Zero(5)), DimensionMismatch);
}

TEST_CASE("fits are deterministic") {
    const Eigen::MatrixXd data = gaussian(60, 20, 9);
    const ProjectionModel a = fit_projection(data);
    const ProjectionModel b = fit_projection(data);
    CHECK(a.basis == b.basis);
    for (int i = 0; i < a.output_dim; ++i) {
        Eigen::Index at;
        a.basis.row(i).cwiseAbs().maxCoeff(&at);
        CHECK(a.basis(i, at) > 0);
    }
}

TEST_CASE("embedding sidecar round-trip") {
    fixtures::TempDir dir;
    EmbeddingTable table;
    table.input_dim = 6;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd v(6);
        for (auto& x : v) x = u(rng);
        table.rows[path_id("/img/" + std::to_string(i))] = v;
    }
    write_embeddings(dir / "e.gsem", table);
    const EmbeddingTable back = read_embeddings(dir / "e.gsem");
    CHECK(back.input_dim == 6);
    REQUIRE(back.rows.size() == 10);
    for (const auto& [id, v] : table.rows) CHECK(back.rows.at(id) == v);

    auto bytes = read_file_bytes(dir / "e.gsem");
    bytes.resize(bytes.size() - 3);
    write_file_bytes(dir / "cut.gsem", bytes);
    CHECK_THROWS_AS(read_embeddings(dir / "cut.gsem"), Error);
}

}
