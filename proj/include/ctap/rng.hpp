#pragma once

#include <array>
#include <cstdint>

namespace ctap {

// Philox-4x64 keyed counter permutation, 10 rounds. Stateless: a (key,
// counter) pair maps to a block of four 64-bit words, so disjoint counter
// ranges give independent streams and any block can be regenerated at will.
class Philox4x64 {
public:
    using Block = std::array<std::uint64_t, 4>;

    Philox4x64(std::uint64_t key0, std::uint64_t key1) : key_{key0, key1} {}

    Block operator()(Block counter) const;

private:
    std::array<std::uint64_t, 2> key_;
};

// One trajectory's private random stream, keyed on (master_seed, stream_id).
// The same pair always reproduces the same variate sequence, independently
// of every other stream, which is what makes parallel runs reproducible.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform01();        // [0, 1)
    double uniform_open01();   // (0, 1]
    double normal();           // N(0,1), Box-Muller
    double gamma(double shape); // Gamma(shape, 1), Marsaglia-Tsang; shape > 0

private:
    void refill();

    Philox4x64 cipher_;
    Philox4x64::Block counter_{{0, 0, 0, 0}};
    Philox4x64::Block block_{{0, 0, 0, 0}};
    int cursor_ = 4; // buffer starts empty
    double spare_normal_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ctap
