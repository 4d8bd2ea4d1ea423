#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncell/bands.hpp"
#include "ncell/boundary_spectra.hpp"
#include "ncell/config.hpp"
#include "ncell/potential.hpp"
#include "ncell/propagate.hpp"

namespace ncell {

using cplx = std::complex<double>;

/// Propagator of the local plane-wave amplitudes (A, B) in
/// psi = A e^{ikx} + B e^{-ikx}, written at the left end of a piece and
/// mapped to its right end. For real potentials W11 = conj(W22) and
/// W12 = conj(W21).
struct WaveMatrix {
  cplx w11{1.0, 0.0}, w12{0.0, 0.0}, w21{0.0, 0.0}, w22{1.0, 0.0};

  cplx det() const { return w11 * w22 - w12 * w21; }

  /// Apply `rhs` first, then `*this`.
  WaveMatrix operator*(const WaveMatrix& rhs) const {
    return {w11 * rhs.w11 + w12 * rhs.w21, w11 * rhs.w12 + w12 * rhs.w22,
            w21 * rhs.w11 + w22 * rhs.w21, w21 * rhs.w12 + w22 * rhs.w22};
  }
};

/// Q^{-1} P Q with Q = [[1, 1], [ik, -ik]]: columns of Q are the Cauchy data
/// of e^{ikx} and e^{-ikx} at the local origin.
inline WaveMatrix wave_matrix(const TransferMatrix& p, double k) {
  const cplx i(0.0, 1.0);
  WaveMatrix w;
  w.w22 = 0.5 * (p.m11 + p.m22 + i * (p.m21 / k - k * p.m12));
  w.w21 = 0.5 * (p.m11 - p.m22 + i * (k * p.m12 + p.m21 / k));
  w.w12 = 0.5 * (p.m11 - p.m22 - i * (k * p.m12 + p.m21 / k));
  w.w11 = 0.5 * (p.m11 + p.m22 - i * (p.m21 / k - k * p.m12));
  return w;
}

/// Free propagation over a distance g in the local amplitude basis.
inline WaveMatrix free_wave(double k, double g) {
  const cplx e = std::exp(cplx(0.0, k * g));
  return {e, 0.0, 0.0, 1.0 / e};
}

/// Scattering data of a potential supported in [x_s, x_e].
///
/// s22 is the transmission amplitude and s21 the reflection amplitude for a
/// wave incident from the left; s11 and s12 belong to incidence from the
/// right. T and R are the same quantities referred to the local amplitudes
/// at the ends of the support: T = s22 e^{ik(x_e - x_s)}, R = s21.
struct ScatteringData {
  double k = 0.0;
  cplx s11, s12, s21, s22;
  cplx T, R;
};

/// Reads the S-matrix off the wave matrix `w` of the potential on
/// [x_s, x_e] and the wave matrix `mirror` of its reflection V(x_s + x_e - x).
///
/// Right incidence on V is left incidence on the mirror image, so s11 comes
/// from an independent product instead of det(W), which cancels badly when
/// |W22| is large.
inline ScatteringData scattering_from_wave(const WaveMatrix& w, const WaveMatrix& mirror, double k,
                                           double x_s, double x_e) {
  ScatteringData s;
  s.k = k;
  const double L = x_e - x_s;
  const cplx eL = std::exp(cplx(0.0, -k * L));
  s.s22 = eL / w.w22;
  s.s21 = -w.w21 / w.w22 * std::exp(cplx(0.0, 2.0 * k * x_s));
  s.s12 = w.w12 / w.w22 * std::exp(cplx(0.0, -2.0 * k * x_e));
  s.s11 = eL / mirror.w22;
  s.T = 1.0 / w.w22;
  s.R = s.s21;
  return s;
}

namespace detail {

inline Layout mirrored(Layout lay) {
  std::reverse(lay.pieces.begin(), lay.pieces.end());
  return lay;
}

}  // namespace detail

/// Single-cell transmission and reflection amplitudes at wavenumber k.
struct CellAmplitudes {
  cplx T1;
  cplx R1;
};

inline CellAmplitudes cell_scattering(const CellPotential& cell, double k) {
  if (!(k > 0.0)) throw std::domain_error("cell_scattering: k must be positive");
  const auto w = wave_matrix(cell_transfer(cell, k * k), k);
  return {1.0 / w.w22, -w.w21 / w.w22};
}

/// The cell wave matrix rebuilt from (T1, R1):
/// [[1/conj(T), -conj(R)/conj(T)], [-R/T, 1/T]].
inline WaveMatrix wave_from_amplitudes(cplx T, cplx R) {
  return {1.0 / std::conj(T), -std::conj(R) / std::conj(T), -R / T, 1.0 / T};
}

/// Raised by compose_n when sin(phi) is too small for the closed form.
class BandEdgeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ComposedAmplitudes {
  cplx Tn;
  cplx Rn;
};

/// n-fold amplitudes from the single-cell pair through the Chebyshev form
///   1/T_n   = U_{n-1}(cos phi) / T1 - U_{n-2}(cos phi),
///   R_n/T_n = U_{n-1}(cos phi) R1 / T1,
/// with U_{m-1}(cos phi) = sin(m phi) / sin(phi).
inline ComposedAmplitudes compose_n(cplx T1, cplx R1, double phi, int n,
                                    double edge_guard = default_tolerances().edge_guard) {
  if (n < 1) throw std::domain_error("compose_n: n must be >= 1");
  if (n == 1) return {T1, R1};
  const double s = std::sin(phi);
  if (std::abs(s) < edge_guard) throw BandEdgeError("compose_n: |sin phi| below edge guard");
  const double u1 = std::sin(n * phi) / s;
  const double u2 = std::sin((n - 1) * phi) / s;
  const cplx invT = u1 / T1 - u2;
  const cplx RoverT = u1 * R1 / T1;
  return {1.0 / invT, RoverT / invT};
}

namespace detail {

inline WaveMatrix wave_power(WaveMatrix w, long n) {
  WaveMatrix r;
  while (n > 0) {
    if (n & 1) r = w * r;
    n >>= 1;
    if (n > 0) w = w * w;
  }
  return r;
}

}  // namespace detail

/// Full S-matrix of the n-cell potential on [0, n a].
///
/// Inside allowed zones away from their edges the closed-form composition is
/// used; near edges and in gaps the wave matrix is raised to the n-th power.
inline ScatteringData n_cell_scattering(const NCellPotential& pot, double k,
                                        const Tolerances& tol = default_tolerances()) {
  if (!(k > 0.0)) throw std::domain_error("n_cell_scattering: k must be positive");
  const Layout cell = pot.cell().layout();
  const auto w1 = wave_matrix(transfer(cell, k * k), k);
  const auto m1 = wave_matrix(transfer(detail::mirrored(cell), k * k), k);
  const double L = pot.length();
  const double c = w1.w22.real();
  if (std::abs(c) < 1.0) {
    const double phi = std::acos(c);
    try {
      const auto tr = compose_n(1.0 / w1.w22, -w1.w21 / w1.w22, phi, pot.n(), tol.edge_guard);
      const auto mr = compose_n(1.0 / m1.w22, -m1.w21 / m1.w22, phi, pot.n(), tol.edge_guard);
      return scattering_from_wave(wave_from_amplitudes(tr.Tn, tr.Rn), wave_from_amplitudes(mr.Tn, mr.Rn),
                                  k, 0.0, L);
    } catch (const BandEdgeError&) {
    }
  }
  return scattering_from_wave(detail::wave_power(w1, pot.n()), detail::wave_power(m1, pot.n()), k, 0.0,
                              L);
}

/// Ordered product of per-cell wave matrices; spaces between cells carry
/// free propagation.
inline ScatteringData n_cell_scattering(const HeteroPotential& pot, double k) {
  if (!(k > 0.0)) throw std::domain_error("n_cell_scattering: k must be positive");
  const Layout lay = pot.layout();
  const auto w = wave_matrix(transfer(lay, k * k), k);
  const auto m = wave_matrix(transfer(detail::mirrored(lay), k * k), k);
  return scattering_from_wave(w, m, k, lay.x0, lay.x0 + lay.length());
}

inline ScatteringData cell_scattering_data(const CellPotential& cell, double k) {
  if (!(k > 0.0)) throw std::domain_error("cell_scattering_data: k must be positive");
  const Layout lay = cell.layout();
  return scattering_from_wave(wave_matrix(transfer(lay, k * k), k),
                              wave_matrix(transfer(detail::mirrored(lay), k * k), k), k, 0.0, cell.a());
}

/// Number of bound states below E <= 0 (node count of the Jost-type solution).
inline long count_bound_states(const Layout& pot, double E) {
  if (E > 0.0) throw std::domain_error("count_bound_states: E must be <= 0");
  return jost_node_count(pot, E);
}

template <class P>
long count_bound_states(const P& pot, double E) {
  return count_bound_states(layout_of(pot), E);
}

/// Negative eigenvalues of the whole-line problem, increasing.
struct BoundSpectrum {
  std::vector<double> energies;

  std::size_t size() const { return energies.size(); }

  /// #{E_j < E}.
  long count(double E) const {
    return static_cast<long>(std::lower_bound(energies.begin(), energies.end(), E) -
                             energies.begin());
  }

  /// #{E_j in [lo, hi]}.
  long count_closed(double lo, double hi) const {
    if (hi < lo) return 0;
    auto a = std::lower_bound(energies.begin(), energies.end(), lo);
    auto b = std::upper_bound(energies.begin(), energies.end(), hi);
    return static_cast<long>(b - a);
  }
};

/// Isolates every jump of the bound-state count in [E_floor, 0] by bisection.
inline BoundSpectrum locate_bound_states(const Layout& pot, double E_floor,
                                         const Tolerances& tol = default_tolerances()) {
  if (!(E_floor < 0.0)) throw std::domain_error("locate_bound_states: E_floor must be negative");
  BoundSpectrum out;
  const long c_lo = count_bound_states(pot, E_floor);
  if (c_lo != 0) throw std::domain_error("locate_bound_states: E_floor is not below the spectrum");
  const long c_hi = count_bound_states(pot, 0.0);

  struct Bracket {
    double lo, hi;
    long clo, chi;
  };
  std::vector<Bracket> stack{{E_floor, 0.0, c_lo, c_hi}};
  const double width = 1e-3 * tol.eigen_tol;
  while (!stack.empty()) {
    auto b = stack.back();
    stack.pop_back();
    if (b.chi == b.clo) continue;
    const double mid = 0.5 * (b.lo + b.hi);
    if (b.hi - b.lo <= width || mid <= b.lo || mid >= b.hi) {
      for (long j = b.clo; j < b.chi; ++j) out.energies.push_back(mid);
      continue;
    }
    const long cm = count_bound_states(pot, mid);
    stack.push_back({mid, b.hi, cm, b.chi});
    stack.push_back({b.lo, mid, b.clo, cm});
  }
  std::sort(out.energies.begin(), out.energies.end());
  return out;
}

template <class P>
BoundSpectrum locate_bound_states(const P& pot, double E_floor,
                                  const Tolerances& tol = default_tolerances()) {
  return locate_bound_states(layout_of(pot), E_floor, tol);
}

enum class ResonanceOrigin { single_cell, bloch_comb };

inline const char* to_string(ResonanceOrigin o) {
  return o == ResonanceOrigin::single_cell ? "single_cell" : "bloch_comb";
}

struct Resonance {
  double E = 0.0;
  ResonanceOrigin origin = ResonanceOrigin::bloch_comb;
  double abs_R = 0.0;  // |R_n(E)| on re-evaluation
};

/// Energies of perfect transmission found in ]E_lo, E_hi].
struct ResonanceSet {
  std::vector<Resonance> resonances;
  bool all_pass = false;  // R vanishes identically (free cell)
  std::vector<std::string> warnings;

  /// Phi_sc(]lo, hi]).
  long count(double lo, double hi) const {
    long c = 0;
    for (const auto& r : resonances) c += (r.E > lo && r.E <= hi) ? 1 : 0;
    return c;
  }
};

namespace detail {

inline double abs_R1(const CellPotential& cell, double E) {
  return std::abs(cell_scattering(cell, std::sqrt(E)).R1);
}

// Zeros of |R1| on ]lo, hi] from a sampled scan refined by golden section.
inline std::vector<double> single_cell_zeros(const CellPotential& cell, double lo, double hi,
                                             int samples, double res_tol) {
  std::vector<double> out;
  if (!(hi > lo)) return out;
  std::vector<double> Es(samples + 1), Rs(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    Es[i] = i == samples ? hi : lo + (hi - lo) * i / samples;
    Rs[i] = Es[i] > 0.0 ? abs_R1(cell, Es[i]) : 1.0;
  }
  auto f = [&](double E) { return abs_R1(cell, E); };
  for (int i = 1; i < samples; ++i) {
    if (!(Rs[i] <= Rs[i - 1] && Rs[i] <= Rs[i + 1])) continue;
    const double a = std::max(Es[i - 1], std::nextafter(lo, hi));
    const auto m = golden_extremum(f, a, Es[i + 1], -1.0);
    if (-m.T < res_tol) out.push_back(m.E);
  }
  if (Rs[samples] < res_tol) out.push_back(hi);
  return out;
}

}  // namespace detail

/// Transmission resonances of the n-cell potential in ]E_lo, E_hi].
///
/// Two families: points of the Bloch comb n*phi(E) = m*pi with
/// sin(phi) != 0, found by inverting the monotone Bloch phase band by band,
/// and zeros of the single-cell reflection. Every candidate is re-evaluated
/// on the n-cell S-matrix; those with |R_n| >= res_tol are dropped with a
/// warning.
inline ResonanceSet find_resonances(const CellPotential& cell, int n, double E_lo, double E_hi,
                                    const Quasimomentum& q,
                                    const Tolerances& tol = default_tolerances(),
                                    int scan_samples = 4000) {
  if (n < 2) throw std::domain_error("find_resonances: n must be >= 2");
  if (!(E_lo >= 0.0 && E_lo < E_hi)) {
    throw std::domain_error("find_resonances: need 0 <= E_lo < E_hi");
  }
  if (E_hi > q.zones().E_max) throw RangeError("find_resonances: E_hi above the zone-table ceiling");
  ResonanceSet set;
  if (cell.is_zero()) {
    set.all_pass = true;
    return set;
  }

  std::vector<Resonance> cand;
  for (const auto& z : q.zones().zones) {
    if (!z.is_allowed()) continue;
    const double lo = std::max(z.E_lo, E_lo), hi = std::min(z.E_hi, E_hi);
    if (!(lo < hi)) continue;
    const double ph_lo = n * q.phase(lo), ph_hi = n * q.phase(hi);
    for (long m = static_cast<long>(n) * z.index + 1; m < static_cast<long>(n) * (z.index + 1);
         ++m) {
      const double target = m * kPi;
      if (target <= ph_lo) continue;
      if (target > ph_hi) break;
      const double E =
          detail::bisect_root([&](double e) { return n * q.phase(e) - target; }, lo, hi);
      cand.push_back({E, ResonanceOrigin::bloch_comb, 0.0});
    }
  }
  for (double E : detail::single_cell_zeros(cell, E_lo, E_hi, scan_samples, tol.res_tol)) {
    cand.push_back({E, ResonanceOrigin::single_cell, 0.0});
  }

  std::stable_sort(cand.begin(), cand.end(),
                   [](const Resonance& a, const Resonance& b) { return a.E < b.E; });
  const NCellPotential pot(cell, n);
  for (const auto& c : cand) {
    if (!set.resonances.empty() &&
        std::abs(set.resonances.back().E - c.E) <= 1e-9 * std::max(1.0, c.E)) {
      if (c.origin == ResonanceOrigin::bloch_comb) set.resonances.back().origin = c.origin;
      continue;
    }
    Resonance r = c;
    r.abs_R = std::abs(n_cell_scattering(pot, std::sqrt(r.E), tol).R);
    if (!(r.abs_R < tol.res_tol)) {
      set.warnings.push_back(std::string(to_string(r.origin)) + " candidate at E=" +
                             std::to_string(r.E) + " has |R_n|=" + std::to_string(r.abs_R));
      continue;
    }
    set.resonances.push_back(r);
  }
  return set;
}

/// Periodic or skew double eigenvalue behind a resonance, if any.
inline PeriodicClass resonance_vs_periodic(const Quasimomentum& q, int n, double lambda) {
  return classify_periodic(q, n, lambda);
}

}  // namespace ncell
