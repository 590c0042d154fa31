#include "gridsight/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <unistd.h>

#include <zlib.h>

#include "byteio.hpp"
#include "gridsight/error.hpp"
#include "gridsight/pixels.hpp"

namespace fs = std::filesystem;

namespace gridsight {

Quantized quantize(const Eigen::Ref<const Eigen::VectorXf>& v) {
    if (!v.allFinite()) throw NonFiniteInput();
    Quantized q;
    q.values.assign(static_cast<std::size_t>(v.size()), 0);
    const float peak = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0f;
    if (peak == 0.0f) return q;
    q.scale = peak / 127.0f;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const float level = std::clamp(std::round(v[i] / q.scale), -127.0f, 127.0f);
        q.values[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(level);
    }
    return q;
}

Eigen::VectorXf dequantize(const Quantized& q) {
    Eigen::VectorXf out(static_cast<Eigen::Index>(q.values.size()));
    for (std::size_t i = 0; i < q.values.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = q.scale * static_cast<float>(q.values[i]);
    return out;
}

IndexEntry IndexEntry::from_descriptor(const RawId& id, Timestamp mtime, std::uint64_t size_bytes,
                                       const Descriptor& descriptor) {
    IndexEntry entry;
    entry.id = id;
    entry.mtime = mtime;
    entry.size_bytes = size_bytes;
    for (Part p : kParts) {
        if (!descriptor.has(p)) continue;
        if (descriptor.part(p).size() != part_dim(p)) throw DimensionMismatch(part_dim(p), descriptor.part(p).size());
        entry.parts[static_cast<std::size_t>(p)] = quantize(descriptor.part(p));
    }
    entry.degenerate = descriptor.degenerate;
    return entry;
}

Descriptor IndexEntry::descriptor() const {
    Descriptor d;
    for (Part p : kParts) {
        const auto& q = parts[static_cast<std::size_t>(p)];
        if (q.values.empty()) continue;
        d.parts[static_cast<std::size_t>(p)] = dequantize(q);
    }
    d.degenerate = degenerate;
    return d;
}

std::vector<std::uint8_t> serialize_index(std::span<const IndexEntry> records) {
    std::vector<std::uint8_t> bytes;
    byteio::Writer out(bytes);
    out.bytes({reinterpret_cast<const std::uint8_t*>(kIndexMagic.data()), kIndexMagic.size()});
    out.u16(kIndexVersion);
    out.u16(static_cast<std::uint16_t>(kPartCount));
    for (int dim : kPartDims) out.u16(static_cast<std::uint16_t>(dim));
    out.u64(records.size());

    for (const auto& entry : records) {
        const std::size_t start = bytes.size();
        out.bytes(entry.id);
        out.i64(entry.mtime);
        out.u64(entry.size_bytes);
        std::uint8_t present = 0;
        for (Part p : kParts)
            if (!entry.parts[static_cast<std::size_t>(p)].values.empty()) present |= 1u << static_cast<int>(p);
        out.u8(present);
        out.u8(entry.degenerate);
        for (Part p : kParts) {
            const auto& q = entry.parts[static_cast<std::size_t>(p)];
            if (q.values.empty()) continue;
            out.f32(q.scale);
            out.bytes({reinterpret_cast<const std::uint8_t*>(q.values.data()), q.values.size()});
        }
        const auto crc = crc32(0L, bytes.data() + start, static_cast<uInt>(bytes.size() - start));
        out.u32(static_cast<std::uint32_t>(crc));
    }
    return bytes;
}

ParsedIndex parse_index(std::span<const std::uint8_t> bytes) {
    byteio::Reader in(bytes);
    std::array<std::uint8_t, 4> magic{};
    in.take(magic);
    if (!in.ok() || !std::equal(magic.begin(), magic.end(), kIndexMagic.begin())) throw CorruptIndex(0, "bad magic");
    if (in.u16() != kIndexVersion) throw CorruptIndex(4, "unsupported version");
    if (in.u16() != kPartCount) throw CorruptIndex(6, "unexpected part count");
    for (int dim : kPartDims)
        if (in.u16() != dim) throw CorruptIndex(in.offset() - 2, "part dimension table mismatch");
    const std::uint64_t count = in.u64();
    if (!in.ok()) throw CorruptIndex(0, "truncated header");

    ParsedIndex parsed;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t start = in.offset();
        IndexEntry entry;
        in.take(entry.id);
        entry.mtime = in.i64();
        entry.size_bytes = in.u64();
        const std::uint8_t present = in.u8();
        entry.degenerate = in.u8();
        if (!in.ok()) throw CorruptIndex(start, "truncated record");
        if (present & ~0x0fu) throw CorruptIndex(start, "bad part mask");
        for (Part p : kParts) {
            if (!(present & (1u << static_cast<int>(p)))) continue;
            auto& q = entry.parts[static_cast<std::size_t>(p)];
            q.scale = in.f32();
            q.values.resize(static_cast<std::size_t>(part_dim(p)));
            in.take({reinterpret_cast<std::uint8_t*>(q.values.data()), q.values.size()});
        }
        const std::size_t end = in.offset();
        const std::uint32_t stored = in.u32();
        if (!in.ok()) throw CorruptIndex(start, "truncated record");
        const auto crc = crc32(0L, bytes.data() + start, static_cast<uInt>(end - start));
        if (stored != static_cast<std::uint32_t>(crc)) throw CorruptIndex(start, "checksum mismatch");
        parsed.records.push_back(std::move(entry));
    }
    parsed.trailing_bytes = in.remaining();
    return parsed;
}

std::size_t FeatureIndex::IdHash::operator()(const RawId& id) const noexcept {
    std::uint64_t h;
    std::memcpy(&h, id.data(), sizeof h);
    return static_cast<std::size_t>(h);
}

FeatureIndex FeatureIndex::open(const fs::path& path) {
    FeatureIndex index;
    index.path_ = path;
    std::error_code ec;
    if (!fs::exists(path, ec)) return index;
    try {
        const auto bytes = read_file_bytes(path);
        ParsedIndex parsed = parse_index(bytes);
        index.report_.records = parsed.records.size();
        index.report_.trailing_bytes = parsed.trailing_bytes;
        index.log_ = std::move(parsed.records);
        for (std::size_t i = 0; i < index.log_.size(); ++i) index.live_[index.log_[i].id] = i;
    } catch (const Error& e) {
        // The index is a cache: discard it and recompute.
        index.log_.clear();
        index.live_.clear();
        index.report_ = {};
        index.report_.rebuilt = true;
        index.report_.error = e.what();
    }
    return index;
}

const IndexEntry* FeatureIndex::find(const RawId& id) const {
    const auto it = live_.find(id);
    return it == live_.end() ? nullptr : &log_[it->second];
}

std::optional<Descriptor> FeatureIndex::lookup(const RawId& id, Timestamp mtime, std::uint64_t size_bytes) const {
    const IndexEntry* entry = find(id);
    if (!entry || entry->mtime != mtime || entry->size_bytes != size_bytes) return std::nullopt;
    return entry->descriptor();
}

void FeatureIndex::upsert(IndexEntry entry) {
    live_[entry.id] = log_.size();
    log_.push_back(std::move(entry));
    ++pending_;
}

void FeatureIndex::checkpoint() {
    if (path_.empty()) throw IoError("index has no backing file");
    std::error_code ec;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path(), ec);

    const auto bytes = serialize_index(log_);
    const fs::path tmp = path_.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot create " + tmp.string());
    std::size_t written = 0;
    while (written < bytes.size()) {
        const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
        if (n <= 0) {
            ::close(fd);
            throw IoError("short write to " + tmp.string());
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw IoError("fsync failed on " + tmp.string());
    }
    ::close(fd);
    fs::rename(tmp, path_, ec);
    if (ec) throw IoError("cannot replace " + path_.string() + ": " + ec.message());
    pending_ = 0;
}

void FeatureIndex::compact() {
    std::vector<IndexEntry> live = live_entries();
    std::sort(live.begin(), live.end(), [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });
    log_ = std::move(live);
    live_.clear();
    for (std::size_t i = 0; i < log_.size(); ++i) live_[log_[i].id] = i;
    checkpoint();
}

std::vector<IndexEntry> FeatureIndex::live_entries() const {
    std::vector<IndexEntry> out;
    out.reserve(live_.size());
    for (std::size_t i = 0; i < log_.size(); ++i) {
        const auto it = live_.find(log_[i].id);
        if (it != live_.end() && it->second == i) out.push_back(log_[i]);
    }
    return out;
}

}  // namespace gridsight
