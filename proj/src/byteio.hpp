#ifndef GRIDSIGHT_SRC_BYTEIO_HPP
#define GRIDSIGHT_SRC_BYTEIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace gridsight::byteio {

/// Little-endian append-only writer.
class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { uint(v, 2); }
    void u32(std::uint32_t v) { uint(v, 4); }
    void u64(std::uint64_t v) { uint(v, 8); }
    void i64(std::int64_t v) { uint(static_cast<std::uint64_t>(v), 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

private:
    void uint(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t>& out_;
};

/// Little-endian bounds-checked reader; `ok()` turns false on overrun.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }
    bool ok() const { return ok_; }

    bool take(std::span<std::uint8_t> dst) {
        if (!need(dst.size())) return false;
        std::memcpy(dst.data(), in_.data() + pos_, dst.size());
        pos_ += dst.size();
        return true;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
    std::uint64_t u64() { return uint(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(uint(8)); }
    float f32() { return std::bit_cast<float>(u32()); }

private:
    bool need(std::size_t n) {
        if (!ok_ || remaining() < n) ok_ = false;
        return ok_;
    }
    std::uint64_t uint(int width) {
        if (!need(static_cast<std::size_t>(width))) return 0;
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

}  // namespace gridsight::byteio

#endif  // GRIDSIGHT_SRC_BYTEIO_HPP
