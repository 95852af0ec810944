#pragma once

#include <cstdint>

namespace fbmvar {

// Inverse of the standard normal CDF (Wichura's PPND16), accurate to
// about 1e-16 relative over (0,1).
double normal_icdf(double p);

// Standard normal CDF, evaluated via erfc for accuracy in both tails.
double normal_cdf(double z);

// Counter-based generator: output i of a stream keyed by `key` is
// mix64(key + (i+1)*golden), with mix64 the splitmix64 finalizer. Any
// index can be generated without stepping through its predecessors, and
// two streams with different keys are independent for all practical
// purposes. Reproducibility contract: a stream is fully determined by its
// key, and consumers document how many variates they draw and in what
// order.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : key_(key) {}

    // i-th raw 64-bit word of the stream, stateless in i.
    std::uint64_t word_at(std::uint64_t i) const;

    // Sequential interface over the same sequence.
    std::uint64_t next_word() { return word_at(pos_++); }

    // Uniform on (0,1), strictly inside the open interval: the top 52 bits
    // select one of 2^52 equal bins and the value is that bin's center.
    double next_uniform() { return to_uniform(next_word()); }

    // Standard normal via the inverse CDF applied to next_uniform().
    double next_normal() { return normal_icdf(next_uniform()); }

    std::uint64_t position() const { return pos_; }
    void seek(std::uint64_t pos) { pos_ = pos; }
    std::uint64_t key() const { return key_; }

    static double to_uniform(std::uint64_t word);

private:
    std::uint64_t key_;
    std::uint64_t pos_ = 0;
};

// Independent stream for substream `index` of a run keyed by `master`.
std::uint64_t derive_key(std::uint64_t master, std::uint64_t index);

} // namespace fbmvar
