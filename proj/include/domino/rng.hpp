#ifndef DOMINO_RNG_HPP
#define DOMINO_RNG_HPP

#include <array>
#include <cstdint>

namespace domino {

// Philox4x64-10 counter-based generator. A block is a pure function of
// (counter, key), so any (seed, path, draw-index) triple maps to the same
// bits no matter how work is split across threads.
struct Philox4x64 {
    using Key = std::array<std::uint64_t, 2>;
    using Ctr = std::array<std::uint64_t, 4>;
    static Ctr block(Ctr ctr, Key key);
};

// Per-path random stream keyed by (seed, stream) with counter
// (path, block, salt, 0). One PathRng per worker/path; instances are cheap.
class PathRng {
  public:
    PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream = 0)
        : key_{seed, stream}, path_(path) {}

    std::uint64_t next_u64() {
        if (left_ == 0) {
            buf_ = Philox4x64::block({path_, block_++, 0x243f6a8885a308d3ull, 0}, key_);
            left_ = 4;
        }
        return buf_[4 - left_--];
    }

    // Strictly inside (0,1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    double normal(); // inverse-CDF variate, one uniform consumed

  private:
    Philox4x64::Key key_;
    std::uint64_t path_;
    std::uint64_t block_ = 0;
    Philox4x64::Ctr buf_{};
    int left_ = 0;
};

} // namespace domino

#endif
