#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "difflab/types.hpp"

namespace difflab {

// xoshiro256** (Blackman & Vigna) seeded through splitmix64 from a
// (seed, stream_id) pair. Gaussian variates use the Box-Muller transform with
// the second variate of each pair cached, so a stream is fully determined by
// its (seed, stream_id) and the sequence of calls made on it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next(); }

  std::uint64_t next();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Vec normal_vec(Eigen::Index d);
  // Integer uniform on [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

// One independent stream per chain: chain i of a batch draws from
// Rng(seed, first_stream + i).
class StreamBank {
 public:
  StreamBank(std::uint64_t seed, std::size_t n, std::uint64_t first_stream = 0);

  Rng& operator[](std::size_t i) { return streams_[i]; }
  std::size_t size() const { return streams_.size(); }
  std::uint64_t seed() const { return seed_; }

  // Fills an n x d matrix of standard normals, row i from stream i.
  Mat normal(Eigen::Index d);

 private:
  std::uint64_t seed_;
  std::vector<Rng> streams_;
};

}  // namespace difflab
