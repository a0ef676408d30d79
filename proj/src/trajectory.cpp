#include "difflab/trajectory.hpp"

#include "difflab/error.hpp"

namespace difflab {

void Trajectory::validate() const {
  require(static_cast<Eigen::Index>(times.size()) == states.rows(),
          "Trajectory: times/states length mismatch");
  if (times.size() < 2) return;
  const bool increasing = times[1] > times[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    const bool ok = increasing ? times[k] > times[k - 1] : times[k] < times[k - 1];
    require(ok, "Trajectory: times must be strictly monotone");
  }
}

Trajectory Ensemble::trajectory(Eigen::Index chain) const {
  require(!frames.empty(), "Ensemble: no frames recorded");
  require(chain >= 0 && chain < chains(), "Ensemble: chain index out of range");
  Trajectory t;
  t.times = times;
  t.seed = seed;
  t.stream_id = static_cast<std::uint64_t>(chain);
  t.states.resize(static_cast<Eigen::Index>(frames.size()), frames.front().cols());
  for (std::size_t k = 0; k < frames.size(); ++k)
    t.states.row(static_cast<Eigen::Index>(k)) = frames[k].row(chain);
  return t;
}

bool all_finite(const Mat& x) { return x.allFinite(); }

}  // namespace difflab
