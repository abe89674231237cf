#ifndef BWKSIM_RNG_HPP
#define BWKSIM_RNG_HPP

#include <cstdint>
#include <random>

namespace bwksim {

// mt19937_64 with a fixed 53-bit uniform mapping. std::uniform_real_distribution
// is not pinned down by the standard, so simulations draw through this wrapper
// to keep streams identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double bernoulli(double p) { return uniform() < p ? 1.0 : 0.0; }

    int uniform_int(int n) {  // {0, ..., n-1}
        int v = static_cast<int>(uniform() * n);
        return v >= n ? n - 1 : v;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace bwksim

#endif
