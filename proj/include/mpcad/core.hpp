#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mpcad {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline constexpr double kPi = 3.14159265358979323846;

struct Index3 {
    int x = 0, y = 0, z = 0;
    bool operator==(const Index3& o) const { return x == o.x && y == o.y && z == o.z; }
};

// Rounding convention used throughout: half-up (0.5 -> 1, 1.5 -> 2).
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }
inline std::int64_t round_half_up_i64(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5)); }

template <typename T>
T clamp(T v, T lo, T hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// File-level failure (bad magic, truncation, malformed row). `offset` is the
// byte position the reader was at when the problem was detected.
class io_error : public std::runtime_error {
public:
    io_error(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

// Configuration failure; carries the offending key so the CLI can report it.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Deterministic random source. mt19937_64 output is pinned by the standard,
// and the distributions here are hand-rolled (std::*_distribution is
// implementation-defined), so identical seeds give identical streams on every
// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo on the raw stream keeps it exact and
    // portable; the bias is irrelevant at the sizes used here.
    std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Box-Muller, cosine branch only. u1 is kept strictly positive.
    double gaussian(double mean = 0.0, double sigma = 1.0) {
        double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
        double u2 = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + sigma * z;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mpcad
