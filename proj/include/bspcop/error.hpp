#pragma once

#include <stdexcept>
#include <string>

namespace bspcop {

enum class Errc {
  invalid_dimension,
  index_out_of_range,
  out_of_domain,
  non_finite_input,
  empty_sample,
  zero_variance,
  zero_density,
  negative_denominator,
  solver_nonconvergence,
  sampler_budget_exhausted,
  parse_error,
  invalid_argument,
};

const char* to_string(Errc code) noexcept;

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_dimension: return "invalid dimension";
    case Errc::index_out_of_range: return "index out of range";
    case Errc::out_of_domain: return "argument out of domain";
    case Errc::non_finite_input: return "non-finite input";
    case Errc::empty_sample: return "empty sample";
    case Errc::zero_variance: return "zero-variance sample";
    case Errc::zero_density: return "zero density";
    case Errc::negative_denominator: return "negative denominator";
    case Errc::solver_nonconvergence: return "solver did not converge";
    case Errc::sampler_budget_exhausted: return "sampler budget exhausted";
    case Errc::parse_error: return "parse error";
    case Errc::invalid_argument: return "invalid argument";
  }
  return "unknown error";
}

}  // namespace bspcop
