#include "ctap/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ctap {
namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
    const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    return static_cast<std::uint64_t>(product);
}

} // namespace

Philox4x64::Block Philox4x64::operator()(Block x) const {
    std::uint64_t k0 = key_[0];
    std::uint64_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, hi1;
        const std::uint64_t lo0 = mulhilo(kMult0, x[0], hi0);
        const std::uint64_t lo1 = mulhilo(kMult1, x[2], hi1);
        x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return x;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : cipher_(master_seed, stream_id) {}

void RngStream::refill() {
    block_ = cipher_(counter_);
    cursor_ = 0;
    for (auto& word : counter_) { // 256-bit little-endian increment
        if (++word != 0) break;
    }
}

std::uint64_t RngStream::next_u64() {
    if (cursor_ == 4) refill();
    return block_[cursor_++];
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0))
        throw std::domain_error("gamma: shape must be positive, got " + std::to_string(shape));
    if (shape < 1.0) {
        // boost to shape+1, scale back by U^(1/shape)
        return gamma(shape + 1.0) * std::pow(uniform_open01(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open01();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace ctap
