#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <variant>

#include "mpcad/volume.hpp"

namespace mpcad {

// MPV1 volume file:
//   8-byte magic "MPVOL001"
//   u32 nx, ny, nz            (little-endian)
//   f64 sx, sy, sz
//   f64 ox, oy, oz
//   u8  dtype                 (0 = signed 16-bit HU, 1 = unsigned 8-bit gray)
//   voxels, x fastest then y then z, little-endian

inline constexpr char kMpv1Magic[8] = {'M', 'P', 'V', 'O', 'L', '0', '0', '1'};

namespace detail {

// This codebase only targets little-endian hosts; writers emit raw bytes.
class ByteWriter {
public:
    explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw io_error("cannot open '" + path + "' for writing", 0);
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        offset_ += n;
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { bytes(&v, 2); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void close() {
        out_.close();
        if (!out_) throw io_error("write to '" + path_ + "' failed", offset_);
    }

private:
    std::string path_;
    std::ofstream out_;
    std::uint64_t offset_ = 0;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open '" + path + "' for reading", 0);
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw io_error("unexpected end of '" + path_ + "'", offset_ + static_cast<std::uint64_t>(in_.gcount()));
        offset_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    float f32() { float v; bytes(&v, 4); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    std::uint64_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    std::uint64_t offset_ = 0;
};

template <typename Volume>
void write_mpv1_header(ByteWriter& w, const Volume& v, std::uint8_t dtype) {
    w.bytes(kMpv1Magic, 8);
    w.u32(static_cast<std::uint32_t>(v.dims.nx));
    w.u32(static_cast<std::uint32_t>(v.dims.ny));
    w.u32(static_cast<std::uint32_t>(v.dims.nz));
    w.f64(v.spacing.x); w.f64(v.spacing.y); w.f64(v.spacing.z);
    w.f64(v.origin.x); w.f64(v.origin.y); w.f64(v.origin.z);
    w.u8(dtype);
}

}  // namespace detail

// HU volumes quantize to int16 on write (round half-up, clamped).
inline void write_mpv1(const std::string& path, const CtVolume& v) {
    validate(v);
    detail::ByteWriter w(path);
    detail::write_mpv1_header(w, v, 0);
    std::vector<std::int16_t> buf(v.hu.size());
    for (std::size_t i = 0; i < v.hu.size(); ++i) {
        std::int64_t q = round_half_up_i64(v.hu[i]);
        buf[i] = static_cast<std::int16_t>(clamp<std::int64_t>(q, -32768, 32767));
    }
    w.bytes(buf.data(), buf.size() * 2);
    w.close();
}

inline void write_mpv1(const std::string& path, const GrayVolume& v) {
    validate(v);
    detail::ByteWriter w(path);
    detail::write_mpv1_header(w, v, 1);
    w.bytes(v.g.data(), v.g.size());
    w.close();
}

using Mpv1Volume = std::variant<CtVolume, GrayVolume>;

inline Mpv1Volume read_mpv1(const std::string& path) {
    detail::ByteReader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMpv1Magic, 8) != 0)
        throw io_error("'" + path + "' is not an MPV1 volume (bad magic)", 0);
    Dim3 dims;
    dims.nx = static_cast<int>(r.u32());
    dims.ny = static_cast<int>(r.u32());
    dims.nz = static_cast<int>(r.u32());
    Vec3 spacing{r.f64(), r.f64(), r.f64()};
    Vec3 origin{r.f64(), r.f64(), r.f64()};
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1 || dims.count() > (1LL << 33))
        throw io_error("'" + path + "' has invalid dims", 8);
    if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0)
        throw io_error("'" + path + "' has non-positive spacing", 20);
    std::uint8_t dtype = r.u8();
    std::size_t n = static_cast<std::size_t>(dims.count());
    if (dtype == 0) {
        CtVolume v;
        v.dims = dims; v.spacing = spacing; v.origin = origin;
        std::vector<std::int16_t> buf(n);
        r.bytes(buf.data(), n * 2);
        v.hu.resize(n);
        for (std::size_t i = 0; i < n; ++i) v.hu[i] = static_cast<double>(buf[i]);
        return v;
    }
    if (dtype == 1) {
        GrayVolume v;
        v.dims = dims; v.spacing = spacing; v.origin = origin;
        v.g.resize(n);
        r.bytes(v.g.data(), n);
        return v;
    }
    throw io_error("'" + path + "' has unknown dtype tag " + std::to_string(int(dtype)), r.offset() - 1);
}

inline CtVolume read_mpv1_ct(const std::string& path) {
    Mpv1Volume v = read_mpv1(path);
    if (!std::holds_alternative<CtVolume>(v))
        throw io_error("'" + path + "': expected HU volume (dtype 0)", 32);
    return std::get<CtVolume>(std::move(v));
}

inline GrayVolume read_mpv1_gray(const std::string& path) {
    Mpv1Volume v = read_mpv1(path);
    if (!std::holds_alternative<GrayVolume>(v))
        throw io_error("'" + path + "': expected gray volume (dtype 1)", 32);
    return std::get<GrayVolume>(std::move(v));
}

}  // namespace mpcad
