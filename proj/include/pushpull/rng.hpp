#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pushpull {

// splitmix64 step; used to derive well-separated child seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t s = root ^ (0x2545f4914f6cdd1dULL * (tag + 1));
  std::uint64_t a = splitmix64(s);
  return splitmix64(s) ^ a;
}

// A seedable random stream with text-serializable state (checkpoints).
// Uniforms are produced from the raw 64-bit output so draw counts are
// fixed and platform-independent; normals use stateless Box-Muller
// (two uniforms per value, nothing cached between calls).
class RngStream {
 public:
  RngStream() : gen_(0) {}
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double uniform_open0() { return 1.0 - uniform(); }

  double normal() {
    const double u1 = uniform_open0();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (!is) throw std::runtime_error("RngStream: malformed serialized state");
  }

  bool operator==(const RngStream& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pushpull
