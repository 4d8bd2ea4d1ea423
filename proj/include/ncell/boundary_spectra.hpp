#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncell/bands.hpp"
#include "ncell/config.hpp"
#include "ncell/potential.hpp"
#include "ncell/propagate.hpp"

namespace ncell {

/// Separated boundary conditions
///   psi(0) cos(alpha) - psi'(0) sin(alpha) = 0,
///   psi(y) cos(beta)  - psi'(y) sin(beta)  = 0,
/// normalized to 0 <= alpha < pi, 0 < beta <= pi.
class BoundaryConditions {
 public:
  BoundaryConditions(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha >= 0.0 && alpha < kPi)) {
      throw ValidationError("boundary conditions: alpha must lie in [0, pi)");
    }
    if (!(beta > 0.0 && beta <= kPi)) {
      throw ValidationError("boundary conditions: beta must lie in (0, pi]");
    }
  }

  static BoundaryConditions dirichlet() { return {0.0, kPi}; }
  static BoundaryConditions neumann() { return {kPi / 2, kPi / 2}; }

  /// Angle from a token: "dirichlet" (alpha = 0, beta = pi), "neumann" (pi/2)
  /// or a number in radians.
  static double parse_angle(const std::string& token, bool is_beta) {
    if (token == "dirichlet") return is_beta ? kPi : 0.0;
    if (token == "neumann") return kPi / 2;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ValidationError("boundary angle: cannot parse \"" + token + "\"");
    }
    if (used != token.size()) throw ValidationError("boundary angle: trailing characters in \"" + token + "\"");
    return v;
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  double alpha_;
  double beta_;
};

/// Eigenvalues of the regular Sturm-Liouville problem, increasing.
struct SLSpectrum {
  std::vector<double> eigenvalues;
  BoundaryConditions bc = BoundaryConditions::dirichlet();

  /// Number of eigenvalues in ]-inf, E].
  long count(double E) const {
    long c = 0;
    for (double e : eigenvalues) c += e <= E ? 1 : 0;
    return c;
  }
};

/// Prufer trace of the solution with (psi, psi')(0) = (sin alpha, cos alpha).
inline PhaseTrace sl_trace(const Layout& pot, const BoundaryConditions& bc, double E) {
  return sweep_phase(pot, E, std::sin(bc.alpha()), std::cos(bc.alpha())).second;
}

/// -arg(psi + i psi')|_0^y / pi for the trace above.
inline double sl_winding(const Layout& pot, const BoundaryConditions& bc, double E) {
  return -sl_trace(pot, bc, E).delta() / kPi;
}

namespace detail {

// Eigenvalues sit where theta(y) = pi/2 - beta - j*pi, j = 0, 1, ...; theta(y)
// starts just below pi/2 for E -> -inf and decreases strictly with E.
inline double sl_target_offset(const BoundaryConditions& bc, double theta_end) {
  return (kPi / 2 - bc.beta() - theta_end) / kPi;
}

}  // namespace detail

/// F(]-inf, E]) for the problem on the layout with boundary conditions bc.
///
/// Resolved from the terminal Prufer angle against the beta target lines;
/// this realizes the bracket formulas exactly, including their two-valued
/// cases (see sl_bracket_bounds).
inline long sl_count(const Layout& pot, const BoundaryConditions& bc, double E) {
  const double x = detail::sl_target_offset(bc, sl_trace(pot, bc, E).theta_end);
  return x < 0.0 ? 0L : static_cast<long>(std::floor(x)) + 1L;
}

/// F(]-inf, E[).
inline long sl_count_open(const Layout& pot, const BoundaryConditions& bc, double E) {
  const double x = detail::sl_target_offset(bc, sl_trace(pot, bc, E).theta_end);
  return x <= 0.0 ? 0L : static_cast<long>(std::ceil(x));
}

inline long sl_count(const NCellPotential& pot, const BoundaryConditions& bc, double E) {
  return sl_count(pot.layout(), bc, E);
}

/// Bounds on F(]-inf, E]) from the winding w = -arg|_0^y / pi:
///   [w]      for (alpha, beta) = (0, pi),
///   [w]..[w]+1 for alpha < beta,
///   [w]+1..[w]+2 for beta < alpha,
///   [w]+1    for alpha = beta.
struct CountBounds {
  long lo = 0;
  long hi = 0;
  bool contains(long v) const { return lo <= v && v <= hi; }
};

inline CountBounds sl_bracket_bounds(const BoundaryConditions& bc, double winding) {
  const long w = integer_part(winding);
  if (bc.alpha() == 0.0 && bc.beta() == kPi) return {w, w};
  if (bc.alpha() == bc.beta()) return {w + 1, w + 1};
  if (bc.alpha() < bc.beta()) return {w, w + 1};
  return {w + 1, w + 2};
}

/// Eigenvalues in ]E_lo, E_hi], each localized by bisection on the terminal
/// Prufer angle. Throws std::logic_error if the angle is ever found to
/// increase with E along a bisection run.
inline SLSpectrum sl_eigenvalues(const Layout& pot, const BoundaryConditions& bc, double E_lo,
                                 double E_hi, const Tolerances& tol = default_tolerances()) {
  if (!(E_lo < E_hi)) throw std::domain_error("sl_eigenvalues: need E_lo < E_hi");
  SLSpectrum spec;
  spec.bc = bc;
  auto theta = [&](double E) { return sl_trace(pot, bc, E).theta_end; };
  const long first = sl_count(pot, bc, E_lo) + 1;
  const long last = sl_count(pot, bc, E_hi);
  const double th_lo0 = theta(E_lo), th_hi0 = theta(E_hi);
  double start = E_lo;
  for (long j = first; j <= last; ++j) {
    const double target = kPi / 2 - bc.beta() - static_cast<double>(j - 1) * kPi;
    double lo = start, hi = E_hi;
    double th_lo = lo == E_lo ? th_lo0 : theta(lo), th_hi = th_hi0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi || hi - lo <= 1e-3 * tol.eigen_tol) break;
      double th = theta(mid);
      // Rounding in the accumulated angle is a few ulps of |theta|.
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(th));
      if (th > th_lo + slack || th < th_hi - slack) {
        throw std::logic_error("sl_eigenvalues: terminal Prufer angle not monotone in E");
      }
      th = std::clamp(th, th_hi, th_lo);
      if (th > target) {
        lo = mid;
        th_lo = th;
      } else {
        hi = mid;
        th_hi = th;
      }
    }
    const double ev = 0.5 * (lo + hi);
    spec.eigenvalues.push_back(ev);
    start = ev;
  }
  return spec;
}

enum class Flavor { periodic, skew };

inline const char* to_string(Flavor f) { return f == Flavor::periodic ? "periodic" : "skew"; }

namespace detail {

inline bool flavor_matches(Flavor f, long m) {
  const bool even = (m % 2) == 0;
  return f == Flavor::periodic ? even : !even;
}

}  // namespace detail

/// Eigenvalue with multiplicity of the periodic or skew-periodic problem on [0, n a].
struct PeriodicEigenvalue {
  double E = 0.0;
  int multiplicity = 1;
};

/// Periodic (or skew) eigenvalues up to E_max from the quasimomentum comb:
/// n*a*p(E) in 2*pi*Z (or pi + 2*pi*Z). Interior band points are double;
/// open-gap edges are simple; closed-gap points are double.
inline std::vector<PeriodicEigenvalue> periodic_eigenvalues(const Quasimomentum& q, int n,
                                                            Flavor flavor, double E_max) {
  if (n < 1) throw std::domain_error("periodic_eigenvalues: n must be >= 1");
  std::vector<PeriodicEigenvalue> out;
  const auto& zones = q.zones().zones;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const Zone& z = zones[i];
    if (z.E_lo > E_max) break;
    if (z.kind == ZoneKind::forbidden) {
      if (!detail::flavor_matches(flavor, static_cast<long>(n) * z.index)) continue;
      if (z.closed) {
        out.push_back({z.E_lo, 2});
        continue;
      }
      if (i != 0) out.push_back({z.E_lo, 1});
      if (!z.truncated && z.E_hi <= E_max) out.push_back({z.E_hi, 1});
      continue;
    }
    const double top = std::min(z.E_hi, E_max);
    const double phase_top = n * q.phase(top);
    for (long m = static_cast<long>(n) * z.index + 1; m < static_cast<long>(n) * (z.index + 1); ++m) {
      if (!detail::flavor_matches(flavor, m)) continue;
      const double target = m * kPi;
      if (target > phase_top) break;
      const double E = detail::bisect_root(
          [&](double e) { return n * q.phase(e) - target; }, z.E_lo, top);
      out.push_back({E, 2});
    }
  }
  std::vector<PeriodicEigenvalue> kept;
  for (const auto& e : out)
    if (e.E <= E_max) kept.push_back(e);
  return kept;
}

/// F(]-inf, E]) with multiplicity for the periodic or skew problem on [0, n a].
inline long periodic_count(const Quasimomentum& q, int n, Flavor flavor, double E) {
  if (E > q.zones().E_max) throw RangeError("periodic_count: E above the zone-table ceiling");
  if (n < 1) throw std::domain_error("periodic_count: n must be >= 1");
  long total = 0;
  const auto& zones = q.zones().zones;
  const long nl = n;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const Zone& z = zones[i];
    if (z.E_lo > E) break;
    if (z.kind == ZoneKind::forbidden) {
      if (!detail::flavor_matches(flavor, nl * z.index)) continue;
      if (z.closed) {
        total += 2;
        continue;
      }
      if (i != 0) total += 1;  // lower edge, already <= E
      if (!z.truncated && z.E_hi <= E) total += 1;
      continue;
    }
    const double phase = E >= z.E_hi && !z.truncated ? (z.index + 1) * kPi : q.phase(E);
    const double nphase = n * phase;
    for (long m = nl * z.index + 1; m < nl * (z.index + 1); ++m) {
      if (m * kPi > nphase) break;
      if (detail::flavor_matches(flavor, m)) total += 2;
    }
  }
  return total;
}

enum class Multiplicity { none, simple, twofold };

struct PeriodicClass {
  Multiplicity multiplicity = Multiplicity::none;
  Flavor flavor = Flavor::periodic;
};

/// Whether E is a simple or double eigenvalue of the periodic or skew problem.
///
/// Near an open-gap edge (within edge_window) the plateau index decides the
/// flavor exactly; elsewhere in a band the comb condition is tested on
/// n*a*p(E) with tolerance comb_tol.
inline PeriodicClass classify_periodic(const Quasimomentum& q, int n, double E,
                                       double edge_window = 1e-8, double comb_tol = 1e-7) {
  const auto& table = q.zones();
  const auto& zones = table.zones;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const Zone& z = zones[i];
    if (z.kind != ZoneKind::forbidden || z.closed) continue;
    const bool near_lo = i != 0 && std::abs(E - z.E_lo) <= edge_window;
    const bool near_hi = !z.truncated && std::abs(E - z.E_hi) <= edge_window;
    if (near_lo || near_hi) {
      const long m = static_cast<long>(n) * z.index;
      return {Multiplicity::simple, detail::flavor_matches(Flavor::periodic, m) ? Flavor::periodic
                                                                                : Flavor::skew};
    }
  }
  if (table.in_open_gap(E)) return {};
  const double Phi = n * q.phase(E);
  const double r = Phi / kPi;
  const double m = std::round(r);
  if (std::abs(r - m) > comb_tol) return {};
  return {Multiplicity::twofold,
          detail::flavor_matches(Flavor::periodic, static_cast<long>(m)) ? Flavor::periodic
                                                                         : Flavor::skew};
}

}  // namespace ncell
