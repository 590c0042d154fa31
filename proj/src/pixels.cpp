#include "gridsight/pixels.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

#include "gridsight/error.hpp"

namespace gridsight {

Eigen::MatrixXd luma(const PixelBuffer& pixels) {
    Eigen::MatrixXd y(pixels.rows, pixels.cols);
    for (int r = 0; r < pixels.rows; ++r) {
        for (int c = 0; c < pixels.cols; ++c) {
            const auto* p = pixels.px(r, c);
            y(r, c) = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
        }
    }
    return y;
}

Eigen::MatrixXd area_weights(int dst, int src) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dst, src);
    const double step = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double lo = i * step;
        const double hi = (i + 1) * step;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int j = first; j <= last; ++j) {
            const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
            if (overlap > 0) w(i, j) = overlap / step;
        }
    }
    return w;
}

Eigen::MatrixXd resample_area(const Eigen::MatrixXd& plane, int rows, int cols) {
    return area_weights(rows, static_cast<int>(plane.rows())) * plane *
           area_weights(cols, static_cast<int>(plane.cols())).transpose();
}

PixelBuffer thumbnail(const PixelBuffer& pixels, int max_edge) {
    if (max_edge < 16) throw std::invalid_argument("max_edge must be at least 16");
    const int longer = std::max(pixels.rows, pixels.cols);
    if (longer <= max_edge) return pixels;

    const double scale = static_cast<double>(max_edge) / longer;
    const int rows = pixels.rows >= pixels.cols
                         ? max_edge
                         : std::max(1, static_cast<int>(std::lround(pixels.rows * scale)));
    const int cols = pixels.cols > pixels.rows
                         ? max_edge
                         : std::max(1, static_cast<int>(std::lround(pixels.cols * scale)));

    const Eigen::MatrixXd wr = area_weights(rows, pixels.rows);
    const Eigen::MatrixXd wc = area_weights(cols, pixels.cols).transpose();
    PixelBuffer out(rows, cols);
    Eigen::MatrixXd channel(pixels.rows, pixels.cols);
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < pixels.rows; ++r)
            for (int c = 0; c < pixels.cols; ++c) channel(r, c) = pixels.px(r, c)[ch];
        const Eigen::MatrixXd small = wr * channel * wc;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                out.px(r, c)[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(small(r, c)), 0L, 255L));
    }
    return out;
}

ImageFormat sniff_format(std::span<const std::uint8_t> h) {
    auto starts = [&](std::initializer_list<std::uint8_t> sig, std::size_t at = 0) {
        if (h.size() < at + sig.size()) return false;
        return std::equal(sig.begin(), sig.end(), h.begin() + static_cast<std::ptrdiff_t>(at));
    };
    if (starts({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a})) return ImageFormat::png;
    if (starts({0xff, 0xd8, 0xff})) return ImageFormat::jpeg;
    if (starts({'B', 'M'})) return ImageFormat::bmp;
    if (starts({'G', 'I', 'F', '8'})) return ImageFormat::gif;
    if (starts({'R', 'I', 'F', 'F'}) && starts({'W', 'E', 'B', 'P'}, 8)) return ImageFormat::webp;
    return ImageFormat::unknown;
}

namespace {

PixelBuffer decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw DecodeError(name, image.message);
    image.format = PNG_FORMAT_RGB;
    PixelBuffer out(static_cast<int>(image.height), static_cast<int>(image.width));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError(name, msg);
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr info) {
    auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
    info->err->format_message(info, err->message);
    std::longjmp(err->jump, 1);
}

// Warnings (premature end of data, corrupt segments) are fatal: a partial
// picture padded with grey must not reach feature extraction.
void jpeg_message(j_common_ptr info, int level) {
    if (level < 0) jpeg_fail(info);
}

PixelBuffer decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& name) {
    jpeg_decompress_struct info{};
    JpegErrorManager err{};
    info.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_fail;
    err.base.emit_message = jpeg_message;
    PixelBuffer out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&info);
        throw DecodeError(name, err.message);
    }
    jpeg_create_decompress(&info);
    jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&info, TRUE);
    info.out_color_space = JCS_RGB;
    jpeg_start_decompress(&info);
    out = PixelBuffer(static_cast<int>(info.output_height), static_cast<int>(info.output_width));
    while (info.output_scanline < info.output_height) {
        JSAMPROW row = out.px(static_cast<int>(info.output_scanline), 0);
        jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
    jpeg_destroy_decompress(&info);
    return out;
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

// Uncompressed 24/32-bit BMP only.
PixelBuffer decode_bmp(std::span<const std::uint8_t> b, const std::string& name) {
    if (b.size() < 54) throw DecodeError(name, "truncated BMP header");
    const std::uint32_t offset = le32(b, 10);
    const auto width = static_cast<std::int32_t>(le32(b, 18));
    const auto height = static_cast<std::int32_t>(le32(b, 22));
    const int bpp = b[28] | b[29] << 8;
    const std::uint32_t compression = le32(b, 30);
    if ((bpp != 24 && bpp != 32) || (compression != 0 && compression != 3))
        throw DecodeError(name, "unsupported BMP variant");
    if (width <= 0 || height == 0) throw DecodeError(name, "bad BMP dimensions");
    const int rows = std::abs(height);
    const std::size_t stride = ((static_cast<std::size_t>(width) * bpp / 8) + 3) & ~std::size_t{3};
    if (offset + stride * rows > b.size()) throw DecodeError(name, "truncated BMP pixel data");
    PixelBuffer out(rows, width);
    for (int r = 0; r < rows; ++r) {
        const int src_row = height > 0 ? rows - 1 - r : r;
        const std::uint8_t* line = b.data() + offset + stride * src_row;
        for (int c = 0; c < width; ++c) {
            const std::uint8_t* p = line + static_cast<std::size_t>(c) * (bpp / 8);
            out.set(r, c, p[2], p[1], p[0]);
        }
    }
    return out;
}

}  // namespace

PixelBuffer decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
    switch (sniff_format(bytes)) {
        case ImageFormat::png:
            return decode_png(bytes, name);
        case ImageFormat::jpeg:
            return decode_jpeg(bytes, name);
        case ImageFormat::bmp:
            return decode_bmp(bytes, name);
        case ImageFormat::gif:
        case ImageFormat::webp:
            throw DecodeError(name, "no decoder for this format");
        case ImageFormat::unknown:
            break;
    }
    throw DecodeError(name, "unrecognized image data");
}

PixelBuffer decode_image_file(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const IoError& e) {
        throw DecodeError(path.string(), e.what());
    }
    return decode_image(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const PixelBuffer& pixels) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(pixels.cols);
    image.height = static_cast<png_uint_32>(pixels.rows);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data.data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data.data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const PixelBuffer& pixels, int quality) {
    jpeg_compress_struct info{};
    JpegErrorManager err{};
    info.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_fail;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&info);
        std::free(buffer);
        throw IoError(std::string("JPEG encode failed: ") + err.message);
    }
    jpeg_create_compress(&info);
    jpeg_mem_dest(&info, &buffer, &size);
    info.image_width = static_cast<JDIMENSION>(pixels.cols);
    info.image_height = static_cast<JDIMENSION>(pixels.rows);
    info.input_components = 3;
    info.in_color_space = JCS_RGB;
    jpeg_set_defaults(&info);
    jpeg_set_quality(&info, quality, TRUE);
    jpeg_start_compress(&info, TRUE);
    while (info.next_scanline < info.image_height) {
        auto* row = const_cast<JSAMPROW>(pixels.px(static_cast<int>(info.next_scanline), 0));
        jpeg_write_scanlines(&info, &row, 1);
    }
    jpeg_finish_compress(&info);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&info);
    std::free(buffer);
    return out;
}

void write_png(const std::filesystem::path& path, const PixelBuffer& pixels) {
    write_file_bytes(path, encode_png(pixels));
}

void write_jpeg(const std::filesystem::path& path, const PixelBuffer& pixels, int quality) {
    write_file_bytes(path, encode_jpeg(pixels, quality));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
        throw IoError("cannot read " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace gridsight
