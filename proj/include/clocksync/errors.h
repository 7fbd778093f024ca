#ifndef CLOCKSYNC_ERRORS_H_
#define CLOCKSYNC_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace clocksync {

// Bad numeric input (negative step, control out of bounds, bad config...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A PiecewiseControl that does not partition [0, T] or violates the bounds.
class InvalidControl : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by NextEventBackward when the start point already lies on the
// switching curve; the caller decides between a switch and singular capture.
class AtSwitchingCurve : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shooting on the terminal state could not bracket R(0) = r0.
class SynthesisFailure : public std::runtime_error {
 public:
  // (terminal_r, R(0)) pairs visited by the bracket scan.
  using Scan = std::vector<std::pair<double, double>>;

  SynthesisFailure(const std::string& what, Scan scan)
      : std::runtime_error(what), scan_(std::move(scan)) {}

  const Scan& scan() const { return scan_; }

 private:
  Scan scan_;
};

// A control sequence outside the admissible optimal forms.
class StructureViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Broken internal invariant of the brute-force oracle (e.g. off-grid state).
class OracleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace clocksync

#endif  // CLOCKSYNC_ERRORS_H_
