#ifndef GRIDSIGHT_PIXELS_HPP
#define GRIDSIGHT_PIXELS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gridsight {

/// Interleaved 8-bit RGB raster, row-major.
struct PixelBuffer {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data;

    PixelBuffer() = default;
    PixelBuffer(int rows_, int cols_, std::uint8_t fill = 0)
        : rows(rows_), cols(cols_), data(static_cast<std::size_t>(rows_) * cols_ * 3, fill) {}

    bool empty() const noexcept { return rows == 0 || cols == 0; }

    std::uint8_t* px(int r, int c) noexcept { return data.data() + (static_cast<std::size_t>(r) * cols + c) * 3; }
    const std::uint8_t* px(int r, int c) const noexcept {
        return data.data() + (static_cast<std::size_t>(r) * cols + c) * 3;
    }

    void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) noexcept {
        auto* p = px(r, c);
        p[0] = red;
        p[1] = green;
        p[2] = blue;
    }

    bool operator==(const PixelBuffer&) const = default;
};

/// Rec. 601 luma in [0, 1].
Eigen::MatrixXd luma(const PixelBuffer& pixels);

/// Area-weighted resampling matrix mapping `src` samples onto `dst` samples.
/// Each destination sample integrates the piecewise-constant source over its
/// footprint, so it works for both reduction and enlargement.
Eigen::MatrixXd area_weights(int dst, int src);

/// Resamples a single plane to `rows` x `cols` with area weighting.
Eigen::MatrixXd resample_area(const Eigen::MatrixXd& plane, int rows, int cols);

/// Shrinks so the longer edge is at most `max_edge`; never upscales.
/// Throws std::invalid_argument when max_edge < 16.
PixelBuffer thumbnail(const PixelBuffer& pixels, int max_edge);

enum class ImageFormat { unknown, png, jpeg, bmp, gif, webp };

ImageFormat sniff_format(std::span<const std::uint8_t> header);

/// Decodes PNG, JPEG or uncompressed BMP bytes. Throws DecodeError.
PixelBuffer decode_image(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
PixelBuffer decode_image_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const PixelBuffer& pixels);
std::vector<std::uint8_t> encode_jpeg(const PixelBuffer& pixels, int quality = 90);

void write_png(const std::filesystem::path& path, const PixelBuffer& pixels);
void write_jpeg(const std::filesystem::path& path, const PixelBuffer& pixels, int quality = 90);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gridsight

#endif  // GRIDSIGHT_PIXELS_HPP
