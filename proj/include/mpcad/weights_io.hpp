#pragma once

#include <map>
#include <string>

#include "mpcad/tensor.hpp"
#include "mpcad/volume_io.hpp"

namespace mpcad {

// MPW1 weights container: magic "MPWGT001", u32 tensor count, then per
// tensor a u16 name length, the name bytes, u8 rank, u32 extents, and f32
// little-endian values. Values are quantized to f32 on write.
inline constexpr char kMpw1Magic[9] = "MPWGT001";

inline void write_mpw1(const std::string& path, const std::map<std::string, Tensor>& tensors) {
    detail::ByteWriter w(path);
    w.bytes(kMpw1Magic, 8);
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xffff) throw std::invalid_argument("tensor name too long: " + name);
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (int e : t.shape) w.u32(static_cast<std::uint32_t>(e));
        for (double v : t.data) w.f32(static_cast<float>(v));
    }
    w.close();
}

inline std::map<std::string, Tensor> read_mpw1(const std::string& path) {
    detail::ByteReader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMpw1Magic, 8) != 0) throw io_error("bad weights magic", 0);
    std::uint32_t count = r.u32();
    std::map<std::string, Tensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = r.u16();
        std::string name(len, '\0');
        if (len) r.bytes(name.data(), len);
        std::uint8_t rank = r.u8();
        Tensor t;
        t.shape.resize(rank);
        std::uint64_t at = r.offset();
        for (std::uint8_t a = 0; a < rank; ++a) {
            std::uint32_t e = r.u32();
            if (e == 0 || e > 0x7fffffffu) throw io_error("invalid tensor extent in '" + name + "'", at);
            t.shape[a] = static_cast<int>(e);
        }
        std::int64_t n = Tensor::count_of(t.shape);
        t.data.resize(static_cast<std::size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) t.data[static_cast<std::size_t>(j)] = r.f32();
        if (out.count(name)) throw io_error("duplicate tensor name '" + name + "'", at);
        out[name] = std::move(t);
    }
    return out;
}

}  // namespace mpcad
