#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ncell/config.hpp"
#include "ncell/potential.hpp"
#include "ncell/propagate.hpp"

namespace ncell {

/// Tr M(E) for the monodromy over one period.
inline double discriminant(const Layout& cell, double E) { return transfer(cell, E).trace(); }
inline double discriminant(const CellPotential& cell, double E) {
  return cell_transfer(cell, E).trace();
}

/// Monodromy over one period with its trace.
struct Monodromy {
  TransferMatrix matrix;
  double trace = 0.0;
  double energy = 0.0;
};

inline Monodromy monodromy(const CellPotential& cell, double E) {
  auto m = cell_transfer(cell, E);
  return {m, m.trace(), E};
}

enum class ZoneKind { allowed, forbidden };

/// One Bloch zone. Forbidden zones carry their plateau index l (a*p = l*pi);
/// allowed zones carry the index of the gap directly below them. A closed
/// gap is a forbidden zone of zero width where |Tr M| touches 2.
struct Zone {
  ZoneKind kind = ZoneKind::forbidden;
  double E_lo = 0.0;
  double E_hi = 0.0;
  int index = 0;
  bool closed = false;
  bool truncated = false;  // ends at the scan ceiling

  bool is_allowed() const { return kind == ZoneKind::allowed; }
  bool is_open_gap() const { return kind == ZoneKind::forbidden && !closed; }
};

/// Ordered zones tiling ]-inf, E_max]; the first is the forbidden zone
/// below the spectrum.
struct ZoneTable {
  std::vector<Zone> zones;
  double E_max = 0.0;
  double a = 1.0;
  int grid_used = 0;

  const Zone& zone_at(double E) const {
    if (E > E_max) throw RangeError("zone_at: E above scan ceiling");
    // Last zone with E_lo <= E; zones sharing an E_lo resolve to the later one.
    auto it = std::upper_bound(zones.begin(), zones.end(), E,
                               [](double e, const Zone& z) { return e < z.E_lo; });
    if (it == zones.begin()) return zones.front();
    return *std::prev(it);
  }

  /// Lower edge of the spectrum.
  double lambda0() const {
    return zones.size() > 1 ? zones.front().E_hi : std::numeric_limits<double>::infinity();
  }

  std::vector<Zone> forbidden_zones() const {
    std::vector<Zone> out;
    for (const auto& z : zones)
      if (z.kind == ZoneKind::forbidden) out.push_back(z);
    return out;
  }

  /// Allowed zones merged across closed gaps.
  std::vector<Zone> merged_allowed() const {
    std::vector<Zone> out;
    for (const auto& z : zones) {
      if (!z.is_allowed()) continue;
      if (!out.empty() && out.back().E_hi == z.E_lo) {
        out.back().E_hi = z.E_hi;
        out.back().truncated = z.truncated;
      } else {
        out.push_back(z);
      }
    }
    return out;
  }

  /// E lies in the closure of the open forbidden set (closed gaps excluded).
  bool in_forbidden_closure(double E) const {
    for (const auto& z : zones) {
      if (z.kind != ZoneKind::forbidden || z.closed) continue;
      const bool first = &z == &zones.front();
      if ((first || E >= z.E_lo) && E <= z.E_hi) return true;
    }
    return false;
  }

  /// E lies strictly inside an open forbidden zone.
  bool in_open_gap(double E) const {
    for (const auto& z : zones) {
      if (z.kind != ZoneKind::forbidden || z.closed) continue;
      const bool first = &z == &zones.front();
      if ((first || E > z.E_lo) && E < z.E_hi) return true;
      if (z.truncated && E > z.E_lo && E <= z.E_hi) return true;
    }
    return false;
  }

  /// Band edges of open gaps and the spectrum bottom.
  std::vector<double> edges() const {
    std::vector<double> out;
    for (const auto& z : zones) {
      if (z.kind != ZoneKind::forbidden || z.closed) continue;
      if (&z != &zones.front()) out.push_back(z.E_lo);
      if (!z.truncated) out.push_back(z.E_hi);
    }
    return out;
  }
};

/// Raised when the adaptive zone scan does not settle.
class ScanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Extremum {
  double E = 0.0;
  double T = 0.0;
};

// Maximizes sign * f on [lo, hi] by golden-section search.
template <class F>
Extremum golden_extremum(const F& f, double lo, double hi, double sign) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = sign * f(x1), f2 = sign * f(x2);
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() *
                                               std::max(1.0, std::abs(lo));
       ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = sign * f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = sign * f(x1);
    }
  }
  return f1 > f2 ? Extremum{x1, sign * f1} : Extremum{x2, sign * f2};
}

// Root of f on [lo, hi] with f(lo), f(hi) of opposite sign, to full precision.
template <class F>
double bisect_root(const F& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// The extremum of Tr M at a closed gap is only located to about sqrt(eps)
// by golden section. There M = +-I, and the off-diagonal entries change
// sign through the point, which pins it down to full precision.
inline double refine_closed_gap(const Layout& cell, double E) {
  const double w = 1e-6 * std::max(1.0, std::abs(E));
  for (int entry = 0; entry < 2; ++entry) {
    auto f = [&](double e) {
      const auto m = transfer(cell, e);
      return entry == 0 ? m.m12 : m.m21;
    };
    const double flo = f(E - w), fhi = f(E + w);
    if (flo != 0.0 && fhi != 0.0 && (flo < 0.0) != (fhi < 0.0)) {
      return bisect_root(f, E - w, E + w);
    }
  }
  return E;
}

struct ScanAttempt {
  ZoneTable table;
  bool alternating = true;
  std::vector<double> suspects;
};

inline ScanAttempt scan_once(const Layout& cell, double a, double E_start, double E_max, int grid,
                             const Tolerances& tol) {
  auto tr = [&](double E) { return discriminant(cell, E); };
  std::vector<double> Es(grid), Ts(grid);
  for (int i = 0; i < grid; ++i) {
    Es[i] = i == grid - 1 ? E_max : E_start + (E_max - E_start) * i / (grid - 1);
    Ts[i] = tr(Es[i]);
  }

  ScanAttempt out;
  std::vector<Extremum> ext;
  for (int i = 1; i + 1 < grid; ++i) {
    const bool is_max = Ts[i] > Ts[i - 1] && Ts[i] >= Ts[i + 1];
    const bool is_min = Ts[i] < Ts[i - 1] && Ts[i] <= Ts[i + 1];
    if (!is_max && !is_min) continue;
    auto e = golden_extremum(tr, Es[i - 1], Es[i + 1], is_max ? 1.0 : -1.0);
    if (std::abs(e.T) < 2.0 - 1e-6) {
      // Discriminant extrema never lie inside a band; resolution problem.
      out.suspects.push_back(e.E);
      out.alternating = false;
      continue;
    }
    ext.push_back(e);
  }
  for (std::size_t j = 0; j < ext.size(); ++j) {
    const double expected = (j % 2 == 0) ? -1.0 : 1.0;
    if ((ext[j].T > 0.0 ? 1.0 : -1.0) != expected) {
      out.alternating = false;
      out.suspects.push_back(ext[j].E);
    }
  }

  ZoneTable& t = out.table;
  t.E_max = E_max;
  t.a = a;
  t.grid_used = grid;
  const double inf = std::numeric_limits<double>::infinity();

  // Lower spectrum edge.
  const double first_hi = ext.empty() ? E_max : ext.front().E;
  if (tr(first_hi) > 2.0) {
    t.zones.push_back({ZoneKind::forbidden, -inf, E_max, 0, false, true});
    return out;
  }
  const double lambda0 = bisect_root([&](double E) { return tr(E) - 2.0; }, E_start, first_hi);
  t.zones.push_back({ZoneKind::forbidden, -inf, lambda0, 0, false, false});
  double band_lo = lambda0;
  int band_index = 0;

  for (std::size_t j = 0; j < ext.size(); ++j) {
    const int l = static_cast<int>(j) + 1;
    const double s = ext[j].T > 0.0 ? 1.0 : -1.0;
    auto f = [&](double E) { return tr(E) - 2.0 * s; };
    if (std::abs(ext[j].T) - 2.0 <= tol.closed_gap_tol) {
      const double Ec = refine_closed_gap(cell, ext[j].E);
      t.zones.push_back({ZoneKind::allowed, band_lo, Ec, band_index, false, false});
      t.zones.push_back({ZoneKind::forbidden, Ec, Ec, l, true, false});
      band_lo = Ec;
      band_index = l;
      continue;
    }
    const double prev = j == 0 ? lambda0 : ext[j - 1].E;
    const double next = j + 1 < ext.size() ? ext[j + 1].E : E_max;
    const double lo_edge = bisect_root(f, prev, ext[j].E);
    t.zones.push_back({ZoneKind::allowed, band_lo, lo_edge, band_index, false, false});
    if (f(next) * s > 0.0) {
      t.zones.push_back({ZoneKind::forbidden, lo_edge, E_max, l, false, true});
      return out;
    }
    const double hi_edge = bisect_root(f, ext[j].E, next);
    t.zones.push_back({ZoneKind::forbidden, lo_edge, hi_edge, l, false, false});
    band_lo = hi_edge;
    band_index = l;
  }

  // Above the last extremum: either the band runs to E_max or a gap opens.
  const double s_next = (ext.size() % 2 == 0) ? -1.0 : 1.0;
  auto f_next = [&](double E) { return tr(E) - 2.0 * s_next; };
  if (f_next(E_max) * s_next > 0.0) {
    const double lo_edge = bisect_root(f_next, band_lo, E_max);
    t.zones.push_back({ZoneKind::allowed, band_lo, lo_edge, band_index, false, false});
    t.zones.push_back({ZoneKind::forbidden, lo_edge, E_max, band_index + 1, false, true});
  } else {
    t.zones.push_back({ZoneKind::allowed, band_lo, E_max, band_index, false, true});
  }
  return out;
}

}  // namespace detail

/// Zone structure of the periodic extension of `cell` below E_max.
///
/// Every local extremum of Tr M on the sample grid is refined by
/// golden-section search and marks one gap (open or closed); gap edges are
/// bisection roots of Tr M = +-2 between consecutive extrema. The grid is
/// doubled until two successive scans report the same zone count.
inline ZoneTable scan_zones(const CellPotential& cell, double E_max, int initial_grid = 2000,
                            const Tolerances& tol = default_tolerances(), int max_doublings = 6) {
  if (initial_grid < 100) throw std::domain_error("scan_zones: initial_grid must be >= 100");
  if (!(E_max > cell.min_value())) {
    throw std::domain_error("scan_zones: E_max must exceed the minimum cell value");
  }
  const Layout lay = cell.layout();
  const double E_start = cell.min_value() - 1.0;

  int grid = initial_grid;
  auto prev = detail::scan_once(lay, cell.a(), E_start, E_max, grid, tol);
  for (int d = 0; d < max_doublings; ++d) {
    grid *= 2;
    auto cur = detail::scan_once(lay, cell.a(), E_start, E_max, grid, tol);
    if (prev.alternating && cur.alternating &&
        cur.table.zones.size() == prev.table.zones.size()) {
      return cur.table;
    }
    prev = std::move(cur);
  }
  std::ostringstream os;
  os << "scan_zones: zone count did not settle after " << max_doublings
     << " grid doublings; suspect intervals near E =";
  for (double e : prev.suspects) os << ' ' << e;
  os << " (possible tangential band edge)";
  throw ScanError(os.str());
}

/// Real part of the global quasimomentum for the periodic extension.
class Quasimomentum {
 public:
  Quasimomentum(CellPotential cell, ZoneTable table)
      : cell_(std::move(cell)), layout_(cell_.layout()), table_(std::move(table)) {}

  static Quasimomentum scan(const CellPotential& cell, double E_max, int grid = 2000,
                            const Tolerances& tol = default_tolerances()) {
    return Quasimomentum(cell, scan_zones(cell, E_max, grid, tol));
  }

  const ZoneTable& zones() const { return table_; }
  const CellPotential& cell() const { return cell_; }
  double a() const { return cell_.a(); }

  /// a * p(E); continuous and nondecreasing.
  double phase(double E) const {
    const Zone& z = table_.zone_at(E);
    if (z.kind == ZoneKind::forbidden) return z.index * kPi;
    const double s = (z.index % 2 == 0) ? 1.0 : -1.0;
    const double c = std::clamp(s * discriminant(layout_, E) / 2.0, -1.0, 1.0);
    return z.index * kPi + std::acos(c);
  }

  double operator()(double E) const { return phase(E) / cell_.a(); }

 private:
  CellPotential cell_;
  Layout layout_;
  ZoneTable table_;
};

inline double quasimomentum_at(const Quasimomentum& q, double E) { return q(E); }

/// Bloch phase a*p(E) on the closure of the allowed set.
inline double bloch_phase(const Quasimomentum& q, double E) {
  if (q.zones().in_open_gap(E)) {
    throw std::domain_error("bloch_phase: E lies strictly inside a forbidden zone");
  }
  return q.phase(E);
}

}  // namespace ncell
