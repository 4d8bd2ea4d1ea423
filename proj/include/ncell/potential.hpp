#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ncell/config.hpp"

namespace ncell {

/// Constant value v on [x_lo, x_hi].
struct Segment {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double v = 0.0;

  double width() const { return x_hi - x_lo; }
  bool operator==(const Segment&) const = default;
};

/// Width/value pair used by the propagators; positions are implicit.
struct Piece {
  double width = 0.0;
  double v = 0.0;
};

/// Contiguous piecewise-constant profile starting at x0; zero outside.
struct Layout {
  double x0 = 0.0;
  std::vector<Piece> pieces;

  double length() const {
    double w = 0.0;
    for (const auto& p : pieces) w += p.width;
    return w;
  }
  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) m = std::min(m, p.v);
    return pieces.empty() ? 0.0 : m;
  }
};

namespace detail {

inline std::string describe(std::size_t i, const Segment& s) {
  std::ostringstream os;
  os << "segment " << i << " [" << s.x_lo << ", " << s.x_hi << "]";
  return os.str();
}

// Sorts segments by x_lo and checks they tile [lo, hi] exactly.
inline std::vector<Segment> validate_tiling(std::vector<Segment> segs, double lo,
                                            double hi, const std::string& what) {
  if (segs.empty()) throw ValidationError(what + ": no segments");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (!std::isfinite(s.x_lo) || !std::isfinite(s.x_hi)) {
      throw ValidationError(what + ": " + describe(i, s) + " has a non-finite endpoint");
    }
    if (!std::isfinite(s.v)) {
      throw ValidationError(what + ": " + describe(i, s) + " has a non-finite value");
    }
    if (!(s.x_hi > s.x_lo)) {
      throw ValidationError(what + ": " + describe(i, s) + " has non-positive width");
    }
  }
  std::stable_sort(segs.begin(), segs.end(),
                   [](const Segment& l, const Segment& r) { return l.x_lo < r.x_lo; });
  if (segs.front().x_lo != lo) {
    std::ostringstream os;
    os << what << ": gap at [" << lo << ", " << segs.front().x_lo << "]";
    if (segs.front().x_lo < lo) {
      os.str("");
      os << what << ": " << describe(0, segs.front()) << " starts before " << lo;
    }
    throw ValidationError(os.str());
  }
  for (std::size_t i = 1; i < segs.size(); ++i) {
    const auto& prev = segs[i - 1];
    const auto& cur = segs[i];
    if (cur.x_lo < prev.x_hi) {
      std::ostringstream os;
      os << what << ": overlap at [" << cur.x_lo << "," << std::min(prev.x_hi, cur.x_hi)
         << "] between " << describe(i - 1, prev) << " and " << describe(i, cur);
      throw ValidationError(os.str());
    }
    if (cur.x_lo > prev.x_hi) {
      std::ostringstream os;
      os << what << ": gap at [" << prev.x_hi << "," << cur.x_lo << "] after "
         << describe(i - 1, prev);
      throw ValidationError(os.str());
    }
  }
  if (segs.back().x_hi != hi) {
    std::ostringstream os;
    os << what << ": " << describe(segs.size() - 1, segs.back())
       << (segs.back().x_hi < hi ? " leaves a gap before " : " extends past ") << hi;
    throw ValidationError(os.str());
  }
  return segs;
}

// Half-open lookup on sorted abutting segments; the last segment also owns hi.
inline double lookup(const std::vector<Segment>& segs, double x) {
  auto it = std::upper_bound(segs.begin(), segs.end(), x,
                             [](double xv, const Segment& s) { return xv < s.x_lo; });
  if (it == segs.begin()) return 0.0;
  --it;
  if (x < it->x_hi || (x == it->x_hi && std::next(it) == segs.end())) return it->v;
  return 0.0;
}

}  // namespace detail

/// One compactly supported cell on [0, a], piecewise constant.
class CellPotential {
 public:
  CellPotential() = default;

  /// Validates and sorts the segments; they must tile [0, a] exactly.
  static CellPotential build(double a, std::vector<Segment> segments) {
    if (!std::isfinite(a) || !(a > 0.0)) {
      throw ValidationError("cell: period a must be positive and finite");
    }
    CellPotential c;
    c.a_ = a;
    c.segments_ = detail::validate_tiling(std::move(segments), 0.0, a, "cell");
    return c;
  }

  double a() const { return a_; }
  const std::vector<Segment>& segments() const { return segments_; }

  double evaluate(double x) const {
    if (x < 0.0 || x > a_) return 0.0;
    return detail::lookup(segments_, x);
  }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : segments_) m = std::min(m, s.v);
    return m;
  }
  double max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& s : segments_) m = std::max(m, s.v);
    return m;
  }
  bool is_zero() const {
    return std::all_of(segments_.begin(), segments_.end(),
                       [](const Segment& s) { return s.v == 0.0; });
  }

  Layout layout() const {
    Layout l;
    for (const auto& s : segments_) l.pieces.push_back({s.width(), s.v});
    return l;
  }

  bool operator==(const CellPotential&) const = default;

 private:
  double a_ = 1.0;
  std::vector<Segment> segments_;
};

inline CellPotential build_cell(double a, std::vector<Segment> segments) {
  return CellPotential::build(a, std::move(segments));
}

/// Splits every segment into m equal sub-segments with the same value.
inline CellPotential refine(const CellPotential& cell, int m) {
  if (m < 1) throw std::domain_error("refine: m must be >= 1");
  std::vector<Segment> out;
  for (const auto& s : cell.segments()) {
    for (int i = 0; i < m; ++i) {
      double lo = i == 0 ? s.x_lo : s.x_lo + s.width() * i / m;
      double hi = i == m - 1 ? s.x_hi : s.x_lo + s.width() * (i + 1) / m;
      out.push_back({lo, hi, s.v});
    }
  }
  return build_cell(cell.a(), std::move(out));
}

/// Piecewise-constant approximation of a smooth cell profile sampled at the
/// midpoints of m equal segments. The approximation quality is the caller's
/// business.
inline CellPotential sample_cell(double a, const std::function<double(double)>& q, int m) {
  if (m < 1) throw std::domain_error("sample_cell: m must be >= 1");
  std::vector<Segment> out;
  for (int i = 0; i < m; ++i) {
    double lo = i == 0 ? 0.0 : a * i / m;
    double hi = i == m - 1 ? a : a * (i + 1) / m;
    out.push_back({lo, hi, q(0.5 * (lo + hi))});
  }
  return build_cell(a, std::move(out));
}

/// q_n(x) = sum_{j<n} q_1(x - j a); zero outside [0, n a).
class NCellPotential {
 public:
  NCellPotential(CellPotential cell, int n) : cell_(std::move(cell)), n_(n) {
    if (n < 1) throw std::domain_error("n-cell potential: n must be >= 1");
  }

  const CellPotential& cell() const { return cell_; }
  int n() const { return n_; }
  double length() const { return n_ * cell_.a(); }

  double evaluate(double x) const {
    const double a = cell_.a();
    if (!(x >= 0.0)) return 0.0;
    double jf = std::floor(x / a);
    if (jf >= n_) {
      // x / a may round up onto n while x < n a still holds.
      if (x - (n_ - 1) * a >= a) return 0.0;
      jf = n_ - 1;
    }
    long j = static_cast<long>(jf);
    double r = x - j * a;
    if (r >= a) {
      if (j + 1 >= n_) return 0.0;
      r = x - (j + 1) * a;
    } else if (r < 0.0) {
      r = x - (j - 1) * a;
    }
    if (r >= a) return 0.0;
    return cell_.evaluate(r);
  }

  Layout layout() const {
    Layout l;
    auto one = cell_.layout();
    l.pieces.reserve(one.pieces.size() * static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) l.pieces.insert(l.pieces.end(), one.pieces.begin(), one.pieces.end());
    return l;
  }

 private:
  CellPotential cell_;
  int n_;
};

inline NCellPotential assemble_n_cell(const CellPotential& cell, int n) {
  return NCellPotential(cell, n);
}

/// q(x) = q_1(x mod a) on the whole line.
class PeriodicExtension {
 public:
  explicit PeriodicExtension(CellPotential cell) : cell_(std::move(cell)) {}

  const CellPotential& cell() const { return cell_; }

  double evaluate(double x) const {
    const double a = cell_.a();
    double j = std::floor(x / a);
    double r = x - j * a;
    if (r >= a) r -= a;
    if (r < 0.0) r += a;
    return detail::lookup(cell_.segments(), r);
  }

 private:
  CellPotential cell_;
};

/// One cell of a heterogeneous potential: segments in absolute coordinates
/// tiling [x_lo, x_hi].
class HeteroCell {
 public:
  static HeteroCell build(double x_lo, double x_hi, std::vector<Segment> segments) {
    if (!std::isfinite(x_lo) || !std::isfinite(x_hi) || !(x_hi > x_lo)) {
      throw ValidationError("hetero cell: support must satisfy x_lo < x_hi");
    }
    HeteroCell c;
    c.x_lo_ = x_lo;
    c.x_hi_ = x_hi;
    c.segments_ = detail::validate_tiling(std::move(segments), x_lo, x_hi, "hetero cell");
    return c;
  }

  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Half-open support [x_lo, x_hi) so abutting cells never double count.
  double evaluate(double x) const {
    if (x < x_lo_ || x >= x_hi_) return 0.0;
    return detail::lookup(segments_, x);
  }

  Layout layout() const {
    Layout l;
    l.x0 = x_lo_;
    for (const auto& s : segments_) l.pieces.push_back({s.width(), s.v});
    return l;
  }

  bool operator==(const HeteroCell&) const = default;

 private:
  double x_lo_ = 0.0;
  double x_hi_ = 0.0;
  std::vector<Segment> segments_;
};

/// Sum of n cells with consecutive, non-overlapping supports.
class HeteroPotential {
 public:
  explicit HeteroPotential(std::vector<HeteroCell> cells) : cells_(std::move(cells)) {
    if (cells_.empty()) throw ValidationError("hetero: at least one cell required");
    for (std::size_t j = 1; j < cells_.size(); ++j) {
      if (cells_[j].x_lo() < cells_[j - 1].x_hi()) {
        std::ostringstream os;
        os << "hetero: cell " << j << " support [" << cells_[j].x_lo() << ", "
           << cells_[j].x_hi() << "] overlaps or precedes cell " << j - 1 << " ["
           << cells_[j - 1].x_lo() << ", " << cells_[j - 1].x_hi() << "]";
        throw ValidationError(os.str());
      }
    }
  }

  std::size_t size() const { return cells_.size(); }
  const std::vector<HeteroCell>& cells() const { return cells_; }
  const HeteroCell& cell(std::size_t j) const { return cells_.at(j); }

  /// Cut points x_1 < ... < x_{n-1}; x_j is the right end of cell j.
  std::vector<double> cut_points() const {
    std::vector<double> x;
    for (std::size_t j = 0; j + 1 < cells_.size(); ++j) x.push_back(cells_[j].x_hi());
    return x;
  }

  double evaluate(double x) const {
    double v = 0.0;
    for (const auto& c : cells_) v += c.evaluate(x);
    return v;
  }

  /// Whole profile from the first support start; gaps become zero pieces.
  Layout layout() const {
    Layout l;
    l.x0 = cells_.front().x_lo();
    double at = l.x0;
    for (const auto& c : cells_) {
      if (c.x_lo() > at) l.pieces.push_back({c.x_lo() - at, 0.0});
      for (const auto& s : c.segments()) l.pieces.push_back({s.width(), s.v});
      at = c.x_hi();
    }
    return l;
  }

 private:
  std::vector<HeteroCell> cells_;
};

inline HeteroPotential assemble_hetero(std::vector<HeteroCell> cells) {
  return HeteroPotential(std::move(cells));
}

/// Places a cell-local profile at an absolute offset.
inline HeteroCell place_cell(const CellPotential& cell, double offset) {
  std::vector<Segment> segs;
  for (const auto& s : cell.segments()) segs.push_back({s.x_lo + offset, s.x_hi + offset, s.v});
  return HeteroCell::build(offset, offset + cell.a(), std::move(segs));
}

inline Layout layout_of(const CellPotential& p) { return p.layout(); }
inline Layout layout_of(const NCellPotential& p) { return p.layout(); }
inline Layout layout_of(const HeteroPotential& p) { return p.layout(); }
inline Layout layout_of(const HeteroCell& p) { return p.layout(); }
inline const Layout& layout_of(const Layout& p) { return p; }

}  // namespace ncell
