#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "ncell/config.hpp"
#include "ncell/potential.hpp"

namespace ncell {

/// Real 2x2 propagator of Cauchy data (psi, psi') at a fixed energy.
struct TransferMatrix {
  double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
  double energy = 0.0;
  double x_lo = 0.0, x_hi = 0.0;

  double det() const { return m11 * m22 - m12 * m21; }
  double trace() const { return m11 + m22; }

  /// Composition: apply `rhs` first, then `*this`.
  TransferMatrix operator*(const TransferMatrix& rhs) const {
    TransferMatrix r;
    r.m11 = m11 * rhs.m11 + m12 * rhs.m21;
    r.m12 = m11 * rhs.m12 + m12 * rhs.m22;
    r.m21 = m21 * rhs.m11 + m22 * rhs.m21;
    r.m22 = m21 * rhs.m12 + m22 * rhs.m22;
    r.energy = energy;
    r.x_lo = rhs.x_lo;
    r.x_hi = x_hi;
    return r;
  }

  static TransferMatrix identity(double E = 0.0, double x = 0.0) {
    TransferMatrix t;
    t.energy = E;
    t.x_lo = t.x_hi = x;
    return t;
  }
};

/// Solution value, derivative and position.
struct CauchyData {
  double psi = 0.0;
  double dpsi = 0.0;
  double x = 0.0;

  bool is_zero() const { return psi == 0.0 && dpsi == 0.0; }
};

inline CauchyData apply(const TransferMatrix& m, const CauchyData& c) {
  return {m.m11 * c.psi + m.m12 * c.dpsi, m.m21 * c.psi + m.m22 * c.dpsi,
          c.x + (m.x_hi - m.x_lo)};
}

/// Continuous branch of theta = arg(psi + i psi') over [x_lo, x_hi].
///
/// Zeros of psi sit at theta = pi/2 (mod pi) and theta always crosses those
/// levels downwards (d theta/dx = -1 there). node_count is the number of
/// such levels strictly between theta_end and theta_start, i.e. the zeros of
/// psi in the open interval ]x_lo, x_hi[. A zero on an interior segment
/// boundary is one level crossing and so is counted once.
struct PhaseTrace {
  double theta_start = 0.0;
  double theta_end = 0.0;
  long node_count = 0;
  double x_lo = 0.0, x_hi = 0.0;
  double log_norm_gain = 0.0;  // log(|end| / |start|)
  double end_dir_psi = 0.0;     // unit vector along the end data
  double end_dir_dpsi = 0.0;

  double delta() const { return theta_end - theta_start; }
};

/// Exact propagator across a constant segment of value v and width w.
inline TransferMatrix segment_propagator(double v, double E, double width) {
  if (width < 0.0) throw std::domain_error("segment_propagator: negative width");
  TransferMatrix t;
  t.energy = E;
  t.x_lo = 0.0;
  t.x_hi = width;
  const double d = E - v;
  if (d > 0.0) {
    const double k = std::sqrt(d);
    const double c = std::cos(k * width), s = std::sin(k * width);
    t.m11 = c;
    t.m12 = s / k;
    t.m21 = -k * s;
    t.m22 = c;
  } else if (d < 0.0) {
    const double kappa = std::sqrt(-d);
    const double c = std::cosh(kappa * width), s = std::sinh(kappa * width);
    t.m11 = c;
    t.m12 = s / kappa;
    t.m21 = kappa * s;
    t.m22 = c;
  } else {
    t.m12 = width;
  }
  return t;
}

/// Ordered product of segment propagators over a layout.
inline TransferMatrix transfer(const Layout& layout, double E) {
  TransferMatrix m = TransferMatrix::identity(E, layout.x0);
  double x = layout.x0;
  for (const auto& p : layout.pieces) {
    auto s = segment_propagator(p.v, E, p.width);
    s.x_lo = x;
    x += p.width;
    s.x_hi = x;
    m = s * m;
  }
  return m;
}

inline TransferMatrix cell_transfer(const CellPotential& cell, double E) {
  return transfer(cell.layout(), E);
}

/// M^n by repeated squaring.
inline TransferMatrix power(TransferMatrix m, long n) {
  if (n < 0) throw std::domain_error("power: negative exponent");
  const double span = (m.x_hi - m.x_lo) * static_cast<double>(n);
  TransferMatrix r = TransferMatrix::identity(m.energy, m.x_lo);
  while (n > 0) {
    if (n & 1) r = m * r;
    n >>= 1;
    if (n > 0) m = m * m;
  }
  r.x_hi = r.x_lo + span;
  return r;
}

namespace detail {

// theta -> arg(k psi + i psi') expressed through theta = arg(psi + i psi').
// g_k is increasing, g_k(eta + pi) = g_k(eta) + pi and |g_k(eta) - eta| < pi/2.
inline double scale_angle(double eta, double k) {
  const double s = std::sin(eta), c = std::cos(eta);
  return eta + std::atan2((k - 1.0) * s * c, c * c + k * s * s);
}

inline double principal_turn(double x0, double y0, double x1, double y1) {
  return std::atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1);
}

}  // namespace detail

/// Angle increment of arg(psi + i psi') across one constant segment.
///
/// The end point is fixed modulo 2*pi by the exact end data. In an
/// oscillatory segment arg(k psi + i psi') turns by exactly -k*w, which gives
/// a closed-form estimate that selects the 2*pi branch. Evanescent and
/// threshold segments keep the data inside one sector bounded by the lines
/// psi' = +-kappa psi, so their increment is the principal value.
inline double segment_phase_increment(double v, double E, double width, double theta_start,
                                      double psi0, double dpsi0, double psi1, double dpsi1) {
  const double principal = detail::principal_turn(psi0, dpsi0, psi1, dpsi1);
  const double d = E - v;
  if (!(d > 0.0)) return principal;
  const double k = std::sqrt(d);
  const double eta0 = detail::scale_angle(theta_start, 1.0 / k);
  const double estimate = detail::scale_angle(eta0 - k * width, k) - theta_start;
  const double turns = std::round((estimate - principal) / (2.0 * kPi));
  return principal + 2.0 * kPi * turns;
}

inline long nodes_between(double theta_start, double theta_end) {
  const double hi = (theta_start - kPi / 2) / kPi;
  const double lo = (theta_end - kPi / 2) / kPi;
  const double count = std::ceil(hi) - 1.0 - std::floor(lo);
  return count > 0.0 ? static_cast<long>(count) : 0L;
}

namespace detail {

// Prufer-angle accumulator over consecutive constant segments.
class PhaseStepper {
 public:
  PhaseStepper(double E, double psi, double dpsi) : E_(E) {
    theta_ = std::atan2(dpsi, psi);
    norm0_ = std::hypot(psi, dpsi);
    psi_ = psi / norm0_;
    dpsi_ = dpsi / norm0_;
  }

  void step(double v, double w) {
    if (w <= 0.0) return;
    const auto m = segment_propagator(v, E_, w);
    const double p1 = m.m11 * psi_ + m.m12 * dpsi_;
    const double d1 = m.m21 * psi_ + m.m22 * dpsi_;
    theta_ += segment_phase_increment(v, E_, w, theta_, psi_, dpsi_, p1, d1);
    const double nrm = std::hypot(p1, d1);
    log_gain_ += std::log(nrm);
    psi_ = p1 / nrm;
    dpsi_ = d1 / nrm;
  }

  void finish(PhaseTrace& trace) const {
    trace.theta_end = theta_;
    trace.log_norm_gain = log_gain_;
    trace.end_dir_psi = psi_;
    trace.end_dir_dpsi = dpsi_;
    trace.node_count = nodes_between(trace.theta_start, trace.theta_end);
  }

  CauchyData end_data(double x) const {
    const double scale = norm0_ * std::exp(log_gain_);
    return {psi_ * scale, dpsi_ * scale, x};
  }

 private:
  double E_;
  double theta_ = 0.0, norm0_ = 1.0, psi_ = 1.0, dpsi_ = 0.0, log_gain_ = 0.0;
};

}  // namespace detail

/// Prufer trace across the whole layout from Cauchy data at its left end.
inline std::pair<CauchyData, PhaseTrace> sweep_phase(const Layout& layout, double E,
                                                     double psi0, double dpsi0) {
  if (psi0 == 0.0 && dpsi0 == 0.0) throw std::domain_error("sweep_phase: zero initial data");
  PhaseTrace trace;
  trace.x_lo = layout.x0;
  trace.x_hi = layout.x0 + layout.length();
  trace.theta_start = std::atan2(dpsi0, psi0);
  detail::PhaseStepper st(E, psi0, dpsi0);
  for (const auto& p : layout.pieces) st.step(p.v, p.width);
  st.finish(trace);
  return {st.end_data(trace.x_hi), trace};
}

/// Propagates Cauchy data from init.x to x_to through the layout (zero
/// potential outside it), tracking the continuous Prufer angle.
inline std::pair<CauchyData, PhaseTrace> propagate_phase(const Layout& layout, double E,
                                                         CauchyData init, double x_to) {
  if (init.is_zero()) throw std::domain_error("propagate_phase: zero initial data");
  if (!std::isfinite(init.psi) || !std::isfinite(init.dpsi)) {
    throw std::domain_error("propagate_phase: non-finite initial data");
  }
  if (x_to < init.x) throw std::domain_error("propagate_phase: x_to < init.x");

  PhaseTrace trace;
  trace.x_lo = init.x;
  trace.x_hi = x_to;
  trace.theta_start = std::atan2(init.dpsi, init.psi);
  detail::PhaseStepper st(E, init.psi, init.dpsi);

  double x = init.x;
  double piece_lo = layout.x0;
  if (x < piece_lo) {
    const double hi = std::min(piece_lo, x_to);
    st.step(0.0, hi - x);
    x = hi;
  }
  for (const auto& p : layout.pieces) {
    const double piece_hi = piece_lo + p.width;
    if (x < x_to && x >= piece_lo && x < piece_hi) {
      const double hi = std::min(piece_hi, x_to);
      st.step(p.v, hi - x);
      x = hi;
    }
    piece_lo = piece_hi;
  }
  if (x < x_to) st.step(0.0, x_to - x);

  st.finish(trace);
  return {st.end_data(x_to), trace};
}

/// kappa = sqrt(-E) and whether the free tail beyond the support adds a zero.
struct TailClass {
  double kappa = 0.0;
  int extra_nodes = 0;
};

/// Zeros of the solution on [y, +inf) where the potential vanishes, from the
/// Cauchy data at y. E < 0 uses the exponential tail, E = 0 the linear one.
inline TailClass tail_nodes(const CauchyData& end, double E) {
  if (E > 0.0) throw std::domain_error("tail_nodes: defined for E <= 0 only");
  TailClass t;
  t.kappa = std::sqrt(-E);
  const double phi = end.psi;
  const double s = E < 0.0 ? t.kappa * end.psi + end.dpsi : end.dpsi;
  t.extra_nodes = ((phi >= 0.0 && s < 0.0) || (phi <= 0.0 && s > 0.0)) ? 1 : 0;
  return t;
}

/// Zeros on the whole line of the solution equal to exp(kappa x) left of the
/// support; this is the number of bound states below E.
inline long jost_node_count(const Layout& layout, double E) {
  if (E > 0.0) throw std::domain_error("jost_node_count: defined for E <= 0 only");
  const double kappa = std::sqrt(-E);
  const auto trace = sweep_phase(layout, E, 1.0, kappa).second;
  const CauchyData dir{trace.end_dir_psi, trace.end_dir_dpsi, trace.x_hi};
  return trace.node_count + tail_nodes(dir, E).extra_nodes;
}

}  // namespace ncell
