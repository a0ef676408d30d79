#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace difflab {

// Raised when an iteration produces a non-finite or otherwise invalid state.
// Carries the step index at which the failure was detected.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& where, std::size_t step)
      : std::runtime_error(where + ": non-finite state at step " +
                           std::to_string(step)),
        step_(step) {}
  NumericError(const std::string& what_arg)
      : std::runtime_error(what_arg), step_(0) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace difflab
