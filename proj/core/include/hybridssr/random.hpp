#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hybridssr {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/*
 * Counter-based random stream. The triple (seed, stream, substream) fully
 * determines the sequence, so replications can be generated in any order
 * and on any number of workers with identical results.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RandomStream {
   public:
    using result_type = std::uint32_t;

    RandomStream(std::uint64_t seed, std::uint32_t stream,
                 std::uint32_t substream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()();
    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal by quantile inversion of uniform().
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t seed() const { return seed_; }
    std::uint32_t stream() const { return stream_; }
    std::uint32_t substream() const { return substream_; }

   private:
    void refill();

    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint32_t substream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

}  // namespace hybridssr
