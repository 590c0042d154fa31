#include <doctest.h>

#include "fixtures.hpp"
#include "gridsight/error.hpp"
#include "gridsight/pixels.hpp"
#include "oracles.hpp"

using namespace gridsight;

namespace {

void put_le(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v, int n) {
    for (int i = 0; i < n; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Bottom-up 24-bit BMP with 4-byte row padding.
std::vector<std::uint8_t> make_bmp(const PixelBuffer& img) {
    const std::size_t stride = (static_cast<std::size_t>(img.cols) * 3 + 3) & ~std::size_t{3};
    std::vector<std::uint8_t> b(54 + stride * img.rows, 0);
    b[0] = 'B';
    b[1] = 'M';
    put_le(b, 2, static_cast<std::uint32_t>(b.size()), 4);
    put_le(b, 10, 54, 4);
    put_le(b, 14, 40, 4);
    put_le(b, 18, static_cast<std::uint32_t>(img.cols), 4);
    put_le(b, 22, static_cast<std::uint32_t>(img.rows), 4);
    put_le(b, 26, 1, 2);
    put_le(b, 28, 24, 2);
    for (int r = 0; r < img.rows; ++r) {
        std::uint8_t* line = b.data() + 54 + stride * (img.rows - 1 - r);
        for (int c = 0; c < img.cols; ++c) {
            line[c * 3 + 0] = img.px(r, c)[2];
            line[c * 3 + 1] = img.px(r, c)[1];
            line[c * 3 + 2] = img.px(r, c)[0];
        }
    }
    return b;
}

}  // namespace

TEST_SUITE("pixels") {

TEST_CASE("2x2 PNG round-trips exactly") {
    PixelBuffer img(2, 2);
    img.set(0, 0, 255, 0, 0);
    img.set(0, 1, 0, 255, 0);
    img.set(1, 0, 0, 0, 255);
    img.set(1, 1, 12, 34, 56);
    const PixelBuffer back = decode_image(encode_png(img));
    CHECK(back == img);
}

TEST_CASE("random noise PNGs decode bit-identically") {
    fixtures::TempDir dir;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> side(1, 40);
    for (int i = 0; i < 100; ++i) {
        const PixelBuffer img = fixtures::noise_image(side(rng), side(rng), rng);
        const auto path = dir / ("n" + std::to_string(i) + ".png");
        write_png(path, img);
        REQUIRE(decode_image_file(path) == img);
    }
}

TEST_CASE("JPEG decodes to the right size and close colours") {
    const PixelBuffer img = fixtures::solid_image(24, 40, 200, 100, 50);
    const PixelBuffer back = decode_image(encode_jpeg(img, 95));
    REQUIRE(back.rows == 24);
    REQUIRE(back.cols == 40);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 4);
}

TEST_CASE("truncated JPEG is a decode error") {
    std::mt19937_64 rng(3);
    auto bytes = encode_jpeg(fixtures::noise_image(64, 64, rng));
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_image(bytes, "cut.jpg"), DecodeError);
}

TEST_CASE("truncated and garbage inputs are decode errors") {
    auto png = encode_png(fixtures::solid_image(8, 8, 1, 2, 3));
    png.resize(png.size() - 20);
    CHECK_THROWS_AS(decode_image(png), DecodeError);
    const std::vector<std::uint8_t> junk{'n', 'o', 'p', 'e'};
    CHECK_THROWS_AS(decode_image(junk), DecodeError);
    CHECK_THROWS_AS(decode_image(std::vector<std::uint8_t>{}), DecodeError);
    const std::vector<std::uint8_t> gif{'G', 'I', 'F', '8', '9', 'a', 0, 0, 0, 0};
    CHECK(sniff_format(gif) == ImageFormat::gif);
    CHECK_THROWS_AS(decode_image(gif), DecodeError);
}

TEST_CASE("24-bit BMP decodes with padding and bottom-up rows") {
    std::mt19937_64 rng(5);
    const PixelBuffer img = fixtures::noise_image(5, 7, rng);
    const auto bytes = make_bmp(img);
    CHECK(sniff_format(bytes) == ImageFormat::bmp);
    CHECK(decode_image(bytes) == img);
}

TEST_CASE("thumbnail sizes") {
    SUBCASE("400 wide by 200 tall at max edge 100") {
        const PixelBuffer t = thumbnail(PixelBuffer(200, 400, 9), 100);
        CHECK(t.cols == 100);
        CHECK(t.rows == 50);
    }
    SUBCASE("never upscales") {
        const PixelBuffer src = fixtures::solid_image(50, 50, 1, 2, 3);
        CHECK(thumbnail(src, 100) == src);
    }
    SUBCASE("uniform colour stays uniform") {
        const PixelBuffer t = thumbnail(fixtures::solid_image(90, 130, 17, 180, 250), 64);
        CHECK(t.cols == 64);
        CHECK(t.rows == 44);
        CHECK(t == fixtures::solid_image(44, 64, 17, 180, 250));
    }
    SUBCASE("tiny max edge is rejected") { CHECK_THROWS_AS(thumbnail(PixelBuffer(4, 4), 15), std::invalid_argument); }
}

TEST_CASE("area resampling matches per-pixel overlap integration") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto [r, c, tr, tc] : {std::array{45, 37, 32, 32}, std::array{10, 7, 32, 32}, std::array{64, 64, 32, 32},
                                 std::array{33, 100, 12, 5}}) {
        Eigen::MatrixXd plane(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) plane(i, j) = u(rng);
        const Eigen::MatrixXd fast = resample_area(plane, tr, tc);
        const Eigen::MatrixXd slow = oracle::resample(plane, tr, tc);
        CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("area weights rows sum to one") {
    for (auto [d, s] : {std::pair{32, 45}, std::pair{32, 7}, std::pair{5, 5}}) {
        const Eigen::MatrixXd w = area_weights(d, s);
        CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("luma uses Rec. 601 weights") {
    const PixelBuffer img = fixtures::solid_image(1, 1, 255, 0, 0);
    CHECK(luma(img)(0, 0) == doctest::Approx(0.299));
}

}
