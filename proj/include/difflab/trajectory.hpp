#pragma once

#include <cstdint>
#include <vector>

#include "difflab/types.hpp"

namespace difflab {

// A single chain: states(k, :) is the state at times[k].
struct Trajectory {
  std::vector<double> times;
  Mat states;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // Throws unless times are strictly monotone and match the state rows.
  void validate() const;
  Eigen::Index dim() const { return states.cols(); }
};

// Many chains advanced together. frames[k] is the n x d batch at times[k].
// Chain i draws its noise from stream i of the run's seed.
struct Ensemble {
  std::vector<double> times;
  std::vector<Mat> frames;
  std::uint64_t seed = 0;

  const Mat& final() const { return frames.back(); }
  Eigen::Index chains() const { return frames.empty() ? 0 : frames.front().rows(); }
  Trajectory trajectory(Eigen::Index chain) const;
};

// Controls which intermediate frames a sampler keeps. The initial and final
// frames are always kept; stride k additionally keeps every k-th step.
struct RecordOptions {
  std::size_t stride = 0;
};

class EnsembleRecorder {
 public:
  EnsembleRecorder(RecordOptions opts, std::uint64_t seed, std::size_t total_steps)
      : opts_(opts), total_(total_steps) {
    out_.seed = seed;
  }

  // step counts from 0 (initial state) to total_steps (final state).
  void offer(std::size_t step, double time, const Mat& x) {
    const bool keep = step == 0 || step == total_ ||
                      (opts_.stride > 0 && step % opts_.stride == 0);
    if (!keep) return;
    out_.times.push_back(time);
    out_.frames.push_back(x);
  }

  Ensemble take() { return std::move(out_); }

 private:
  RecordOptions opts_;
  std::size_t total_;
  Ensemble out_;
};

bool all_finite(const Mat& x);

}  // namespace difflab
