#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncell/bands.hpp"
#include "ncell/boundary_spectra.hpp"
#include "ncell/config.hpp"
#include "ncell/io.hpp"
#include "ncell/potential.hpp"
#include "ncell/propagate.hpp"
#include "ncell/scatter.hpp"

namespace ncell {

/// One inequality lo <= value <= hi evaluated at a single configuration.
struct CheckRecord {
  std::string check;
  int instance = -1;
  int n = 0;
  double E = 0.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  long value = 0;
  long lo = 0;
  long hi = 0;
  double aux = std::numeric_limits<double>::quiet_NaN();  // n*a*p/pi or a real-valued metric
  bool pass = true;
  std::string note;
};

struct InstanceInfo {
  int id = 0;
  std::string potential;  // serialized potential document
  std::string suite;      // set when reports of several suites are merged
};

struct CountReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<InstanceInfo> instances;
  std::vector<CheckRecord> records;

  long pass_count() const {
    return static_cast<long>(std::count_if(records.begin(), records.end(),
                                           [](const CheckRecord& r) { return r.pass; }));
  }
  long fail_count() const { return static_cast<long>(records.size()) - pass_count(); }
  bool ok() const { return fail_count() == 0; }

  std::vector<CheckRecord> failures() const {
    std::vector<CheckRecord> out;
    for (const auto& r : records)
      if (!r.pass) out.push_back(r);
    return out;
  }

  void append(CountReport other) {
    for (auto& i : other.instances) instances.push_back(std::move(i));
    for (auto& r : other.records) records.push_back(std::move(r));
  }
};

/// Parameters of a verification run. Instances are drawn from a seeded
/// generator so a campaign is reproducible from its seed alone.
struct Campaign {
  std::uint64_t seed = 7;
  int instances = 20;
  int min_segments = 1;
  int max_segments = 4;
  double v_lo = -50.0;
  double v_hi = 20.0;
  double a = 1.0;
  std::vector<int> ns{1, 2, 4, 8, 16};
  int grid_points = 200;
  double E_top = 60.0;  // upper end of grids that extend above zero
  int zone_grid = 2000;
  bool parallel = true;
  Tolerances tol = default_tolerances();

  /// Optional independent counters; when set, a deterministic subsample of
  /// grid points (every `oracle_stride`-th) is cross-checked.
  std::function<long(const Layout&, double)> bound_oracle;
  std::function<long(const Layout&, const BoundaryConditions&, double)> sl_oracle;
  int oracle_stride = 10;
  double oracle_guard = 1e-2;  // skip points this close to an eigenvalue

  /// Added to every computed bound-state count; used to prove the harness
  /// catches a wrong count.
  long inject_offset = 0;
};

/// Deterministic instance generator: cells of width a with 1..4 constant
/// segments whose breakpoints sit on multiples of a/16.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(const Campaign& c) : c_(c), rng_(c.seed) {}

  CellPotential next_cell() {
    std::uniform_int_distribution<int> nseg(c_.min_segments, c_.max_segments);
    std::uniform_real_distribution<double> val(c_.v_lo, c_.v_hi);
    const int k = nseg(rng_);
    std::vector<int> cuts;
    for (int i = 1; i < 16; ++i) cuts.push_back(i);
    std::shuffle(cuts.begin(), cuts.end(), rng_);
    cuts.resize(static_cast<std::size_t>(k - 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Segment> segs;
    double lo = 0.0;
    for (int i = 0; i < k; ++i) {
      const double hi = i + 1 < k ? c_.a * cuts[static_cast<std::size_t>(i)] / 16.0 : c_.a;
      segs.push_back({lo, hi, std::round(val(rng_) * 64.0) / 64.0});
      lo = hi;
    }
    return build_cell(c_.a, std::move(segs));
  }

  /// 2..4 cells of unit width separated by spaces from {0, 1/2, 1, 2}.
  HeteroPotential next_hetero(int min_cells = 2, int max_cells = 4) {
    std::uniform_int_distribution<int> ncell(min_cells, max_cells);
    std::uniform_int_distribution<int> space(0, 3);
    const double spaces[] = {0.0, 0.5, 1.0, 2.0};
    const int m = ncell(rng_);
    std::vector<HeteroCell> cells;
    double x = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j > 0) x += spaces[space(rng_)];
      cells.push_back(place_cell(next_cell(), x));
      x += c_.a;
    }
    return HeteroPotential(std::move(cells));
  }

 private:
  Campaign c_;
  std::mt19937_64 rng_;
};

namespace detail {

// n*a*p(E)/pi, exact on plateaus.
inline double comb_ratio(const Quasimomentum& q, int n, double E) {
  const Zone& z = q.zones().zone_at(E);
  if (z.kind == ZoneKind::forbidden) return static_cast<double>(n) * z.index;
  return n * q.phase(E) / kPi;
}

// Uniform grid on [lo, hi] moved off band edges by 10 * edge_tol.
inline std::vector<double> nudged_grid(double lo, double hi, int points, const ZoneTable& t,
                                       const Tolerances& tol) {
  std::vector<double> edges = t.edges();
  for (const auto& z : t.zones)
    if (z.closed) edges.push_back(z.E_lo);
  const double step = 10.0 * tol.edge_tol;
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    double E = points == 1 ? hi : lo + (hi - lo) * i / (points - 1);
    for (double e : edges) {
      if (std::abs(E - e) < step) E = (E >= e && e + step <= hi) ? e + step : e - step;
    }
    out.push_back(E);
  }
  return out;
}

inline bool near_any(double E, const std::vector<double>& pts, double guard) {
  for (double p : pts)
    if (std::abs(E - p) <= guard * (1.0 + std::abs(p))) return true;
  return false;
}

inline CheckRecord bound_record(std::string check, int inst, int n, double E, long value, long lo,
                                long hi, double aux = std::numeric_limits<double>::quiet_NaN()) {
  CheckRecord r;
  r.check = std::move(check);
  r.instance = inst;
  r.n = n;
  r.E = E;
  r.value = value;
  r.lo = lo;
  r.hi = hi;
  r.aux = aux;
  r.pass = lo <= value && value <= hi;
  return r;
}

template <class Work>
std::vector<CountReport> run_instances(const Campaign& c, int count, const Work& work) {
  std::vector<CountReport> parts(static_cast<std::size_t>(count));
  if (!c.parallel) {
    for (int i = 0; i < count; ++i) parts[static_cast<std::size_t>(i)] = work(i);
    return parts;
  }
  std::vector<std::future<CountReport>> fut;
  for (int i = 0; i < count; ++i) fut.push_back(std::async(std::launch::async, work, i));
  for (int i = 0; i < count; ++i) parts[static_cast<std::size_t>(i)] = fut[static_cast<std::size_t>(i)].get();
  return parts;
}

inline CountReport merge(std::string suite, std::uint64_t seed, std::vector<CountReport> parts) {
  CountReport out;
  out.suite = std::move(suite);
  out.seed = seed;
  for (auto& p : parts) out.append(std::move(p));
  return out;
}

inline double floor_of(const CellPotential& cell) { return std::min(cell.min_value(), 0.0) - 1.0; }

// Normalized (alpha, beta) pairs drawn from {0, pi/4, pi/2, 3pi/4, pi}^2.
inline std::vector<BoundaryConditions> boundary_grid() {
  std::vector<BoundaryConditions> out;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) {
      const double al = i * kPi / 4, be = j * kPi / 4;
      if (al < kPi && be > 0.0) out.emplace_back(al, be);
    }
  return out;
}

enum class BcCase { dirichlet, alpha_below_beta, beta_below_alpha, equal };

inline BcCase classify_bc(const BoundaryConditions& bc) {
  if (bc.alpha() == 0.0 && bc.beta() == kPi) return BcCase::dirichlet;
  if (bc.alpha() == bc.beta()) return BcCase::equal;
  return bc.alpha() < bc.beta() ? BcCase::alpha_below_beta : BcCase::beta_below_alpha;
}

}  // namespace detail

/// Bracket on the boundary-value count F(]-inf, E[) in terms of [n a p / pi].
/// `generic` selects the sharper form valid off the closure of the gaps.
inline CountBounds sl_theorem_bounds(const BoundaryConditions& bc, long bracket, bool generic) {
  switch (detail::classify_bc(bc)) {
    case detail::BcCase::dirichlet:
      return generic ? CountBounds{bracket, bracket} : CountBounds{bracket - 1, bracket};
    case detail::BcCase::alpha_below_beta:
      return generic ? CountBounds{bracket, bracket + 1} : CountBounds{bracket - 1, bracket + 1};
    case detail::BcCase::beta_below_alpha:
      return generic ? CountBounds{bracket + 1, bracket + 2} : CountBounds{bracket, bracket + 2};
    case detail::BcCase::equal:
      return generic ? CountBounds{bracket + 1, bracket + 1} : CountBounds{bracket, bracket + 1};
  }
  return {};
}

/// Admissible number of boundary-value eigenvalues in the closure of gap j
/// (j = 0 is the gap below the spectrum).
inline CountBounds sl_gap_bounds(const BoundaryConditions& bc, bool first_gap) {
  switch (detail::classify_bc(bc)) {
    case detail::BcCase::dirichlet:
      return first_gap ? CountBounds{0, 0} : CountBounds{1, 1};
    case detail::BcCase::alpha_below_beta:
      return first_gap ? CountBounds{0, 1} : CountBounds{0, 2};
    case detail::BcCase::beta_below_alpha:
      return {0, 2};
    case detail::BcCase::equal:
      return {1, 1};
  }
  return {};
}

/// Bound-state counts against the quasimomentum bracket on E <= 0.
inline CountReport check_theorem1(const Campaign& c) {
  InstanceGenerator gen(c);
  std::vector<CellPotential> cells;
  for (int i = 0; i < c.instances; ++i) cells.push_back(gen.next_cell());

  auto work = [&](int i) {
    CountReport rep;
    const auto& cell = cells[static_cast<std::size_t>(i)];
    rep.instances.push_back({i, save_potential(cell)});
    const double E_floor = detail::floor_of(cell);
    const auto q = Quasimomentum::scan(cell, std::max(1.0, cell.min_value() + 1.0), c.zone_grid, c.tol);
    const auto grid = detail::nudged_grid(E_floor, 0.0, c.grid_points, q.zones(), c.tol);
    for (int n : c.ns) {
      const NCellPotential pot(cell, n);
      const Layout lay = pot.layout();
      const auto bound = locate_bound_states(lay, E_floor, c.tol);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double E = grid[g];
        const long F = count_bound_states(lay, E) + c.inject_offset;
        const double P = detail::comb_ratio(q, n, E);
        const long b = integer_part(P);
        rep.records.push_back(detail::bound_record("bound_state_within_one", i, n, E, F, b - 1, b + 1, P));
        if (!q.zones().in_forbidden_closure(E)) {
          rep.records.push_back(detail::bound_record("bound_state_bracket", i, n, E, F, b, b + 1, P));
        }
        if (c.bound_oracle && g % static_cast<std::size_t>(c.oracle_stride) == 0 &&
            !detail::near_any(E, bound.energies, c.oracle_guard)) {
          const long o = c.bound_oracle(lay, E);
          rep.records.push_back(detail::bound_record("bound_state_oracle", i, n, E, F, o, o));
        }
      }
      // At most two bound states in each gap closure, one in the first.
      const auto& zones = q.zones().zones;
      for (std::size_t z = 0; z < zones.size(); ++z) {
        const Zone& gz = zones[z];
        if (gz.kind != ZoneKind::forbidden || gz.closed || gz.E_lo >= 0.0) continue;
        const double lo = z == 0 ? E_floor : gz.E_lo - 1e-8;
        const double hi = std::min(gz.E_hi + 1e-8, std::nextafter(0.0, -1.0));
        const long m = bound.count_closed(lo, hi) + c.inject_offset;
        auto r = detail::bound_record("bound_state_gap_mass", i, n, gz.E_lo, m, 0, z == 0 ? 1 : 2);
        r.note = "gap " + std::to_string(gz.index);
        rep.records.push_back(r);
      }
    }
    return rep;
  };
  return detail::merge("theorem1", c.seed, detail::run_instances(c, c.instances, work));
}

/// Boundary-value counts on [0, n a] against the quasimomentum bracket for
/// every normalized (alpha, beta) on the quarter-pi grid.
inline CountReport check_theorem2(const Campaign& c) {
  InstanceGenerator gen(c);
  std::vector<CellPotential> cells;
  for (int i = 0; i < c.instances; ++i) cells.push_back(gen.next_cell());
  const auto bcs = detail::boundary_grid();

  auto work = [&](int i) {
    CountReport rep;
    const auto& cell = cells[static_cast<std::size_t>(i)];
    rep.instances.push_back({i, save_potential(cell)});
    const double E_floor = detail::floor_of(cell);
    const double E_top = std::max(c.E_top, cell.max_value() + 1.0);
    const auto q = Quasimomentum::scan(cell, E_top + 1.0, c.zone_grid, c.tol);
    const auto grid = detail::nudged_grid(E_floor, E_top, c.grid_points, q.zones(), c.tol);
    for (int n : c.ns) {
      const Layout lay = NCellPotential(cell, n).layout();
      for (const auto& bc : bcs) {
        std::vector<double> ev;
        if (c.sl_oracle) ev = sl_eigenvalues(lay, bc, E_floor - 1.0, E_top + 1.0, c.tol).eigenvalues;
        auto tag = [&](CheckRecord r) {
          r.alpha = bc.alpha();
          r.beta = bc.beta();
          return r;
        };
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const double E = grid[g];
          const long F = sl_count_open(lay, bc, E);
          const double P = detail::comb_ratio(q, n, E);
          const long b = integer_part(P);
          auto wide = sl_theorem_bounds(bc, b, false);
          rep.records.push_back(tag(detail::bound_record("sl_bracket", i, n, E, F, wide.lo, wide.hi, P)));
          if (!q.zones().in_forbidden_closure(E)) {
            auto tight = sl_theorem_bounds(bc, b, true);
            rep.records.push_back(
                tag(detail::bound_record("sl_bracket_generic", i, n, E, F, tight.lo, tight.hi, P)));
          }
          const auto wb = sl_bracket_bounds(bc, sl_winding(lay, bc, E));
          rep.records.push_back(
              tag(detail::bound_record("sl_winding_bracket", i, n, E, sl_count(lay, bc, E), wb.lo, wb.hi)));
          if (c.sl_oracle && g % static_cast<std::size_t>(c.oracle_stride) == 0 &&
              !detail::near_any(E, ev, c.oracle_guard)) {
            const long o = c.sl_oracle(lay, bc, E);
            rep.records.push_back(tag(detail::bound_record("sl_oracle", i, n, E, F, o, o)));
          }
        }
        const auto& zones = q.zones().zones;
        for (std::size_t z = 0; z < zones.size(); ++z) {
          const Zone& gz = zones[z];
          if (gz.kind != ZoneKind::forbidden || gz.closed || gz.truncated) continue;
          const long hi_count = sl_count(lay, bc, gz.E_hi + 1e-8);
          const long lo_count = z == 0 ? 0 : sl_count_open(lay, bc, gz.E_lo - 1e-8);
          const auto gb = sl_gap_bounds(bc, z == 0);
          auto r = tag(detail::bound_record("sl_gap_mass", i, n, gz.E_lo, hi_count - lo_count, gb.lo, gb.hi));
          r.note = "gap " + std::to_string(gz.index);
          rep.records.push_back(r);
        }
      }
    }
    return rep;
  };
  return detail::merge("theorem2", c.seed, detail::run_instances(c, c.instances, work));
}

/// Periodic and skew counts, their vanishing on open gaps, and the
/// correspondence between comb resonances and double eigenvalues.
inline CountReport check_periodic(const Campaign& c) {
  InstanceGenerator gen(c);
  std::vector<CellPotential> cells;
  for (int i = 0; i < c.instances; ++i) cells.push_back(gen.next_cell());

  auto work = [&](int i) {
    CountReport rep;
    const auto& cell = cells[static_cast<std::size_t>(i)];
    rep.instances.push_back({i, save_potential(cell)});
    const double E_floor = detail::floor_of(cell);
    const double E_top = std::max(c.E_top, cell.max_value() + 1.0);
    const auto q = Quasimomentum::scan(cell, E_top, c.zone_grid, c.tol);
    const auto grid = detail::nudged_grid(E_floor, E_top, c.grid_points, q.zones(), c.tol);
    const auto& zones = q.zones().zones;
    for (int n : c.ns) {
      for (Flavor fl : {Flavor::periodic, Flavor::skew}) {
        const std::string name = std::string(to_string(fl));
        for (double E : grid) {
          const long F = periodic_count(q, n, fl, E);
          const double P = detail::comb_ratio(q, n, E);
          const long b = integer_part(P);
          rep.records.push_back(detail::bound_record(name + "_bracket", i, n, E, F, b, b + 1, P));
        }
        for (std::size_t z = 0; z < zones.size(); ++z) {
          const Zone& gz = zones[z];
          if (gz.kind != ZoneKind::forbidden || gz.closed) continue;
          const double lo = z == 0 ? E_floor : gz.E_lo;
          const double hi = gz.E_hi;
          const double w = hi - lo;
          if (!(w > 1e-6)) continue;
          const long mass = periodic_count(q, n, fl, hi - 1e-3 * w) - periodic_count(q, n, fl, lo + 1e-3 * w);
          rep.records.push_back(detail::bound_record(name + "_gap_mass", i, n, lo, mass, 0, 0));
        }
      }
      // Open-gap interiors carry no periodic or skew spectrum.
      for (std::size_t z = 0; z < zones.size(); ++z) {
        const Zone& gz = zones[z];
        if (gz.kind != ZoneKind::forbidden || gz.closed) continue;
        const double lo = z == 0 ? E_floor : gz.E_lo, hi = gz.E_hi;
        if (!(hi - lo > 1e-6)) continue;
        long hits = 0;
        for (int s = 1; s <= 50; ++s) {
          const double E = lo + (hi - lo) * s / 51.0;
          hits += classify_periodic(q, n, E).multiplicity != Multiplicity::none ? 1 : 0;
        }
        rep.records.push_back(detail::bound_record("gap_classified_points", i, n, lo, hits, 0, 0));
      }
      if (n < 2 || cell.is_zero()) continue;
      const auto res = find_resonances(cell, n, 0.0, E_top, q, c.tol);
      for (const auto& w : res.warnings) {
        CheckRecord r;
        r.check = "resonance_warning";
        r.instance = i;
        r.n = n;
        r.note = w;
        rep.records.push_back(r);
      }
      for (const auto& r : res.resonances) {
        const bool in_gap = q.zones().in_open_gap(r.E);
        rep.records.push_back(detail::bound_record("resonance_in_allowed_set", i, n, r.E, in_gap ? 1 : 0, 0, 0, r.abs_R));
        if (r.origin != ResonanceOrigin::bloch_comb) continue;
        const auto cls = resonance_vs_periodic(q, n, r.E);
        auto rec = detail::bound_record("comb_resonance_double", i, n, r.E,
                                        cls.multiplicity == Multiplicity::twofold ? 1 : 0, 1, 1, r.abs_R);
        rec.note = to_string(cls.flavor);
        rep.records.push_back(rec);
      }
      // Open gaps sampled at 50 points contain no resonance.
      for (std::size_t z = 1; z < zones.size(); ++z) {
        const Zone& gz = zones[z];
        if (gz.kind != ZoneKind::forbidden || gz.closed || gz.E_lo <= 0.0) continue;
        const NCellPotential pot(cell, n);
        long hits = 0;
        for (int s = 1; s <= 50; ++s) {
          const double E = gz.E_lo + (gz.E_hi - gz.E_lo) * s / 51.0;
          hits += std::abs(n_cell_scattering(pot, std::sqrt(E), c.tol).R) < c.tol.res_tol ? 1 : 0;
        }
        hits += res.count(gz.E_lo, std::nextafter(gz.E_hi, gz.E_lo));
        rep.records.push_back(detail::bound_record("gap_resonances", i, n, gz.E_lo, hits, 0, 0));
      }
      // Each fully resolved band above zero carries n - 1 comb resonances.
      for (const auto& z : zones) {
        if (!z.is_allowed() || z.truncated || !(z.E_lo > 0.0)) continue;
        long comb = 0;
        for (const auto& r : res.resonances)
          comb += (r.origin == ResonanceOrigin::bloch_comb && r.E > z.E_lo && r.E < z.E_hi) ? 1 : 0;
        rep.records.push_back(detail::bound_record("band_comb_count", i, n, z.E_lo, comb, n - 1, n - 1));
      }
    }
    return rep;
  };
  return detail::merge("periodic", c.seed, detail::run_instances(c, c.instances, work));
}

/// Sup over the grid of |(na)^{-1} Phi_sc(]0,E]) - (p(E) - p(0))/pi|.
inline double resonance_density_error(const CellPotential& cell, int n, const Quasimomentum& q,
                                      double E_top, int points,
                                      const Tolerances& tol = default_tolerances()) {
  const auto res = find_resonances(cell, n, 0.0, E_top, q, tol);
  const double na = n * cell.a();
  const double p0 = q(0.0);
  double err = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double E = E_top * i / points;
    const double lhs = res.count(0.0, E) / na;
    const double rhs = (q(E) - p0) / kPi;
    err = std::max(err, std::abs(lhs - rhs));
  }
  return err;
}

/// Finite-n sandwich bounds relating counts to p(E), and the O(1/n) decay
/// of the resonance density error.
inline CountReport check_density(const Campaign& c) {
  InstanceGenerator gen(c);
  std::vector<CellPotential> cells;
  for (int i = 0; i < c.instances; ++i) cells.push_back(gen.next_cell());
  const std::vector<BoundaryConditions> bcs{
      BoundaryConditions::dirichlet(), BoundaryConditions(kPi / 4, 3 * kPi / 4),
      BoundaryConditions(kPi / 2, kPi / 2), BoundaryConditions(3 * kPi / 4, kPi / 4)};

  // F - lo_off <= P <= F + hi_off  <=>  ceil(P) - hi_off <= F <= floor(P) + lo_off.
  auto sandwich = [](std::string name, int inst, int n, double E, long F, double P, long lo_off,
                     long hi_off) {
    const long lo = static_cast<long>(std::ceil(P)) - hi_off;
    const long hi = static_cast<long>(std::floor(P)) + lo_off;
    return detail::bound_record(std::move(name), inst, n, E, F, lo, hi, P);
  };

  auto work = [&](int i) {
    CountReport rep;
    const auto& cell = cells[static_cast<std::size_t>(i)];
    rep.instances.push_back({i, save_potential(cell)});
    const double E_floor = detail::floor_of(cell);
    const double E_top = std::max(c.E_top, cell.max_value() + 1.0);
    const auto q = Quasimomentum::scan(cell, E_top, c.zone_grid, c.tol);
    const auto grid = detail::nudged_grid(E_floor, E_top, c.grid_points, q.zones(), c.tol);
    for (int n : c.ns) {
      const Layout lay = NCellPotential(cell, n).layout();
      for (double E : grid) {
        const double P = detail::comb_ratio(q, n, E);
        if (E <= 0.0) {
          rep.records.push_back(sandwich("bound_state_sandwich", i, n, E, count_bound_states(lay, E), P, 1, 2));
        }
        for (const auto& bc : bcs) {
          const long F = sl_count(lay, bc, E);
          CheckRecord r;
          if (bc.beta() < bc.alpha()) {
            r = sandwich("sl_sandwich", i, n, E, F, P, 2, 1);
            auto probe = sandwich("sl_sandwich_upper3_probe", i, n, E, F, P, 0, 3);
            probe.alpha = bc.alpha();
            probe.beta = bc.beta();
            probe.note = probe.pass ? "" : "violates F <= nap/pi <= F+3";
            probe.pass = true;  // informational
            rep.records.push_back(probe);
          } else {
            r = sandwich("sl_sandwich", i, n, E, F, P, 1, 2);
          }
          r.alpha = bc.alpha();
          r.beta = bc.beta();
          rep.records.push_back(r);
        }
        for (Flavor fl : {Flavor::periodic, Flavor::skew}) {
          rep.records.push_back(sandwich(std::string(to_string(fl)) + "_sandwich", i, n, E,
                                         periodic_count(q, n, fl, E), P, 1, 1));
        }
      }
    }
    return rep;
  };
  auto rep = detail::merge("density", c.seed, detail::run_instances(c, c.instances, work));

  // Resonance density on a fixed barrier: n * error should not grow with n.
  const auto barrier = build_cell(1.0, {{0.0, 0.5, 10.0}, {0.5, 1.0, 0.0}});
  const double E_top = 120.0;
  const auto q = Quasimomentum::scan(barrier, E_top, c.zone_grid, c.tol);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {4, 8, 16, 32}) {
    const double err = resonance_density_error(barrier, n, q, E_top, 2000, c.tol);
    CheckRecord r;
    r.check = "resonance_density_scaled_error";
    r.instance = -1;
    r.n = n;
    r.E = E_top;
    r.aux = n * err;
    r.pass = n * err <= 1.1 * prev;
    r.note = "n*err=" + std::to_string(n * err);
    rep.records.push_back(r);
    prev = n * err;
  }
  return rep;
}

/// Bound states of a chain of different cells against the sum over cells.
inline CountReport check_theorem3(const Campaign& c) {
  InstanceGenerator gen(c);
  std::vector<HeteroPotential> pots;
  for (int i = 0; i < c.instances; ++i) pots.push_back(gen.next_hetero());
  // A single-cell chain for the degenerate case.
  pots.push_back(HeteroPotential({place_cell(gen.next_cell(), 0.0)}));

  auto work = [&](int i) {
    CountReport rep;
    const auto& pot = pots[static_cast<std::size_t>(i)];
    rep.instances.push_back({i, save_potential(pot)});
    const Layout lay = pot.layout();
    const int m = static_cast<int>(pot.size());
    double vmin = 0.0;
    for (const auto& p : lay.pieces) vmin = std::min(vmin, p.v);
    const double E_floor = vmin - 1.0;
    std::vector<Layout> parts;
    for (const auto& cell : pot.cells()) parts.push_back(cell.layout());
    const auto bound = locate_bound_states(lay, E_floor, c.tol);
    long sharp = 0;
    for (int g = 0; g < c.grid_points; ++g) {
      const double E = E_floor + (0.0 - E_floor) * g / (c.grid_points - 1);
      const long F = count_bound_states(lay, E) + c.inject_offset;
      long sum = 0;
      for (const auto& p : parts) sum += count_bound_states(p, E);
      rep.records.push_back(detail::bound_record("chain_count_deviation", i, m, E, F - sum, -(m - 1), m - 1));
      sharp = std::max(sharp, std::abs(F - sum));
      if (c.bound_oracle && g % c.oracle_stride == 0 &&
          !detail::near_any(E, bound.energies, c.oracle_guard)) {
        const long o = c.bound_oracle(lay, E);
        rep.records.push_back(detail::bound_record("chain_oracle", i, m, E, F, o, o));
      }
    }
    long sum0 = 0;
    for (const auto& p : parts) sum0 += count_bound_states(p, 0.0);
    const long F0 = count_bound_states(lay, 0.0) + c.inject_offset;
    rep.records.push_back(detail::bound_record("chain_count_at_zero", i, m, 0.0, F0, 1 - m + sum0, sum0));
    CheckRecord probe;
    probe.check = "chain_sharpness_probe";
    probe.instance = i;
    probe.n = m;
    probe.value = sharp;
    probe.note = "max |F - sum F_j| on grid (informational)";
    rep.records.push_back(probe);
    return rep;
  };
  return detail::merge("theorem3", c.seed,
                       detail::run_instances(c, static_cast<int>(pots.size()), work));
}

/// Suite names accepted by run_suite.
inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"theorem1", "theorem2", "periodic", "density",
                                              "theorem3", "all"};
  return names;
}

/// Campaign defaults per suite; `base` supplies seed, oracles and overrides.
inline Campaign campaign_for(const std::string& suite, Campaign base) {
  if (suite == "periodic") {
    base.v_lo = 0.0;
    base.v_hi = 30.0;
    base.ns = {1, 2, 4, 8};
    base.E_top = 120.0;
    base.instances = std::min(base.instances, 10);
  } else if (suite == "density") {
    base.instances = std::min(base.instances, 10);
    base.ns = {1, 4, 16};
    base.grid_points = std::min(base.grid_points, 100);
  }
  return base;
}

inline CountReport run_suite(const std::string& suite, const Campaign& base) {
  if (suite == "theorem1") return check_theorem1(campaign_for(suite, base));
  if (suite == "theorem2") return check_theorem2(campaign_for(suite, base));
  if (suite == "periodic") return check_periodic(campaign_for(suite, base));
  if (suite == "density") return check_density(campaign_for(suite, base));
  if (suite == "theorem3") return check_theorem3(campaign_for(suite, base));
  if (suite == "all") {
    CountReport all;
    all.suite = "all";
    all.seed = base.seed;
    for (const auto& s : suite_names()) {
      if (s == "all") continue;
      auto r = run_suite(s, base);
      for (auto& inst : r.instances) inst.suite = s;
      all.append(std::move(r));
    }
    return all;
  }
  throw ValidationError("unknown suite \"" + suite + "\"");
}

namespace detail {

inline nlohmann::json record_json(const CheckRecord& r, const std::string& suite, std::uint64_t seed) {
  nlohmann::json j{{"check", r.check}, {"instance", r.instance}, {"n", r.n}, {"E", r.E},
                   {"value", r.value}, {"lo", r.lo},             {"hi", r.hi}, {"pass", r.pass},
                   {"seed", seed},     {"suite", suite}};
  if (!std::isnan(r.alpha)) j["alpha"] = r.alpha;
  if (!std::isnan(r.beta)) j["beta"] = r.beta;
  if (!std::isnan(r.aux)) j["aux"] = r.aux;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace detail

/// JSON report. Records are limited to failures unless `all_records`.
inline std::string report_json(const CountReport& rep, bool all_records = false) {
  using nlohmann::json;
  json inst = json::array();
  for (const auto& i : rep.instances) {
    json pj{{"id", i.id}, {"potential", json::parse(i.potential)}};
    if (!i.suite.empty()) pj["suite"] = i.suite;
    inst.push_back(pj);
  }
  json recs = json::array();
  std::map<std::string, std::pair<long, long>> per_check;
  for (const auto& r : rep.records) {
    auto& pc = per_check[r.check];
    (r.pass ? pc.first : pc.second) += 1;
    if (all_records || !r.pass) recs.push_back(detail::record_json(r, rep.suite, rep.seed));
  }
  json checks = json::object();
  for (const auto& [name, pf] : per_check) checks[name] = json{{"pass", pf.first}, {"fail", pf.second}};
  json doc{{"suite", rep.suite},
           {"seed", rep.seed},
           {"instances", inst},
           {"records", recs},
           {"summary", json{{"pass", rep.pass_count()}, {"fail", rep.fail_count()}, {"checks", checks}}}};
  return doc.dump(2) + "\n";
}

/// CSV report, one line per record (failures only unless `all_records`).
inline std::string report_csv(const CountReport& rep, bool all_records = false) {
  std::ostringstream os;
  os.precision(17);
  os << "suite,seed,check,instance,n,E,alpha,beta,value,lo,hi,aux,pass,note\n";
  for (const auto& r : rep.records) {
    if (!all_records && r.pass) continue;
    auto num = [](double v) {
      std::ostringstream s;
      s.precision(17);
      if (!std::isnan(v)) s << v;
      return s.str();
    };
    os << rep.suite << ',' << rep.seed << ',' << r.check << ',' << r.instance << ',' << r.n << ','
       << num(r.E) << ',' << num(r.alpha) << ',' << num(r.beta) << ',' << r.value << ',' << r.lo
       << ',' << r.hi << ',' << num(r.aux) << ',' << (r.pass ? "true" : "false") << ",\"" << r.note
       << "\"\n";
  }
  os << "# summary pass=" << rep.pass_count() << " fail=" << rep.fail_count() << "\n";
  return os.str();
}

}  // namespace ncell
