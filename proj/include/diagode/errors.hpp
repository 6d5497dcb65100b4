#pragma once

#include <stdexcept>
#include <string>

namespace diagode {

enum class ErrorKind {
  invalid_input,         // non-finite data, bad dimensions, bad parameters
  singular_matrix,       // pivot below threshold
  contract_violation,    // a documented precondition failed
  divergence,            // fixed-point iteration did not converge
  domain_error,          // ln/sqrt of a nonpositive real, etc.
  contour_hits_spectrum, // resolvent singular on an integration contour
  separation_destroyed,  // smoothing pushed profile gaps below 1/2
  magnitude_too_small,   // frame smallness needs a larger parameter
  no_unique_solution,    // boundary operator singular
  step_failure,          // integrator overflow / non-finite state
  bound_violation,       // an estimate failed in strict mode
  config_error,          // unparsable or inconsistent configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace diagode
