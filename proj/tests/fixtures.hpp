#ifndef GRIDSIGHT_TESTS_FIXTURES_HPP
#define GRIDSIGHT_TESTS_FIXTURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

#include "gridsight/pixels.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using gridsight::PixelBuffer;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string pattern = (fs::temp_directory_path() / "gridsight-test-XXXXXX").string();
        if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline PixelBuffer noise_image(int rows, int cols, std::mt19937_64& rng) {
    PixelBuffer img(rows, cols);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(byte(rng));
    return img;
}

inline PixelBuffer solid_image(int rows, int cols, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    PixelBuffer img(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) img.set(y, x, r, g, b);
    return img;
}

inline std::array<std::uint8_t, 3> hsv_to_rgb(double hue_deg, double s, double v) {
    const double c = v * s;
    const double h = std::fmod(hue_deg, 360.0) / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = v - c;
    auto to_byte = [](double f) { return static_cast<std::uint8_t>(std::lround(std::clamp(f, 0.0, 1.0) * 255.0)); };
    return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

/// Single-hue image with saturation rising left to right and value rising top to bottom.
inline PixelBuffer hue_image(double hue_deg, int size = 32) {
    PixelBuffer img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double s = 0.45 + 0.55 * x / (size - 1);
            const double v = 0.45 + 0.55 * y / (size - 1);
            const auto rgb = hsv_to_rgb(hue_deg, s, v);
            img.set(y, x, rgb[0], rgb[1], rgb[2]);
        }
    }
    return img;
}

/// Writes `count` distinct noisy PNGs named img_000.png, ... into `dir`.
inline void write_corpus(const fs::path& dir, int count, int size = 48, std::uint64_t seed = 7) {
    fs::create_directories(dir);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
        PixelBuffer img = hue_image(360.0 * i / count, size);
        std::uniform_int_distribution<int> jitter(-12, 12);
        for (auto& v : img.data) v = static_cast<std::uint8_t>(std::clamp(v + jitter(rng), 0, 255));
        char name[32];
        std::snprintf(name, sizeof name, "img_%03d.png", i);
        gridsight::write_png(dir / name, img);
    }
}

/// Captures stdout of a shell command.
inline std::string run_capture(const std::string& command, int* status = nullptr) {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(command.c_str(), "r"), ::pclose);
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
    const int rc = ::pclose(pipe.release());
    if (status) *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return out;
}

inline std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace fixtures

#endif  // GRIDSIGHT_TESTS_FIXTURES_HPP
