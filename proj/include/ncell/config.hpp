#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ncell {

/// Raised when a potential (or other input object) violates its invariants.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input document cannot be parsed against the schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an energy is requested outside a computed zone table.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Numerical tolerances shared by every module.
struct Tolerances {
  double det_tol = 1e-12;     // |det M - 1| for exact propagators
  double oracle_tol = 1e-8;   // agreement against independent oracles
  double edge_tol = 1e-10;    // band-edge localization in E
  double phase_tol = 1e-9;    // plateau identity a*p = l*pi
  double res_tol = 1e-6;      // |R_n| below which transmission is perfect
  double edge_guard = 1e-6;   // |sin phi| below which compose_n is not used
  double closed_gap_tol = 1e-11;  // ||Tr|-2| at an extremum counted as a closed gap
  double eigen_tol = 1e-10;   // eigenvalue bracketing width in E
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

inline constexpr double kPi = 3.14159265358979323846;

/// Integer part with the convention [r] = -1 for -1 < r < 0 and the
/// ordinary integer part for r >= 0. Arguments at or below -1 are outside
/// the convention and rejected.
inline long integer_part(double r) {
  if (!(r > -1.0)) {
    throw std::domain_error("integer_part: argument " + std::to_string(r) +
                            " is not > -1");
  }
  return r < 0.0 ? -1L : static_cast<long>(std::floor(r));
}

}  // namespace ncell
