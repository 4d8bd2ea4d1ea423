#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "ncell/bands.hpp"
#include "ncell/boundary_spectra.hpp"
#include "ncell/io.hpp"
#include "ncell/scatter.hpp"
#include "ncell/verify.hpp"

namespace ncell::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("--n: cannot parse \"" + item + "\"");
    }
    if (used != item.size()) throw UsageError("--n: cannot parse \"" + item + "\"");
    if (v < 1) throw UsageError("--n: values must be >= 1");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--n: empty list");
  return out;
}

struct Options {
  std::string pot_file;
  std::string n_text;
  double emin = std::nan("");
  double emax = std::nan("");
  double energy = std::nan("");
  int grid = 2000;
  std::string alpha = "dirichlet";
  std::string beta = "dirichlet";
  std::string flavor = "periodic";
  std::uint64_t seed = 7;
  std::string suite = "all";
  std::string out_file;
  std::string format = "csv";
  bool all_records = false;
};

namespace detail {

inline void add_common(CLI::App* sub, Options& o, bool with_n) {
  sub->add_option("--pot,--cell", o.pot_file, "potential JSON file")->required();
  if (with_n) sub->add_option("--n", o.n_text, "cell count(s), comma separated");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", o.out_file, "output file (default stdout)");
}

inline std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(15) << v;
  return s.str();
}

inline std::vector<int> n_values(const Options& o, int fallback) {
  return o.n_text.empty() ? std::vector<int>{fallback} : parse_n_list(o.n_text);
}

// An ncell document supplies its own n unless --n overrides it.
inline int default_n(const AnyPotential& pot) {
  if (auto p = std::get_if<NCellPotential>(&pot)) return p->n();
  return 1;
}

inline double need(double v, const char* flag) {
  if (std::isnan(v)) throw UsageError(std::string(flag) + " is required");
  return v;
}

// Emits rows either as CSV or as a JSON array of objects.
class Table {
 public:
  explicit Table(std::vector<std::string> cols) : cols_(std::move(cols)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  std::string render(const std::string& format) const {
    std::ostringstream os;
    if (format == "json") {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows_) {
        nlohmann::json obj;
        for (std::size_t i = 0; i < cols_.size(); ++i) {
          const auto& cell = r[i];
          char* end = nullptr;
          const double v = std::strtod(cell.c_str(), &end);
          if (!cell.empty() && end && *end == '\0') obj[cols_[i]] = v;
          else obj[cols_[i]] = cell;
        }
        arr.push_back(obj);
      }
      os << arr.dump(2) << "\n";
      return os.str();
    }
    for (std::size_t i = 0; i < cols_.size(); ++i) os << (i ? "," : "") << cols_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> cols_;
  std::vector<std::vector<std::string>> rows_;
};

inline Table bands_table(const Options& o) {
  const auto cell = cell_of(load_potential(o.pot_file));
  const auto table = scan_zones(cell, need(o.emax, "--emax"), o.grid);
  Table t({"kind", "E_lo", "E_hi", "index", "closed", "truncated"});
  for (const auto& z : table.zones) {
    t.row({z.is_allowed() ? "allowed" : "forbidden", num(z.E_lo), num(z.E_hi),
           std::to_string(z.index), z.closed ? "1" : "0", z.truncated ? "1" : "0"});
  }
  return t;
}

inline Table scatter_table(const Options& o) {
  const auto pot = load_potential(o.pot_file);
  const double emax = need(o.emax, "--emax");
  const double emin = std::isnan(o.emin) ? emax / o.grid : o.emin;
  if (!(emin > 0.0 && emin <= emax)) throw UsageError("scatter: need 0 < --emin <= --emax");
  Table t({"n", "E", "k", "ReT", "ImT", "absT2", "ReR", "ImR"});
  auto emit = [&](int n, auto&& eval) {
    for (int i = 0; i < o.grid; ++i) {
      const double E = o.grid == 1 ? emin : emin + (emax - emin) * i / (o.grid - 1);
      const ScatteringData s = eval(std::sqrt(E));
      t.row({std::to_string(n), num(E), num(s.k), num(s.T.real()), num(s.T.imag()),
             num(std::norm(s.T)), num(s.R.real()), num(s.R.imag())});
    }
  };
  if (auto h = std::get_if<HeteroPotential>(&pot)) {
    emit(static_cast<int>(h->size()), [&](double k) { return n_cell_scattering(*h, k); });
    return t;
  }
  const auto cell = cell_of(pot);
  for (int n : n_values(o, default_n(pot))) {
    const NCellPotential np(cell, n);
    emit(n, [&](double k) { return n_cell_scattering(np, k); });
  }
  return t;
}

inline Table resonance_table(const Options& o, std::string& note) {
  const auto pot = load_potential(o.pot_file);
  const auto cell = cell_of(pot);
  const double emax = need(o.emax, "--emax");
  const double emin = std::isnan(o.emin) ? 0.0 : o.emin;
  const auto q = Quasimomentum::scan(cell, emax, o.grid);
  Table t({"n", "lambda", "origin", "absR"});
  for (int n : n_values(o, std::max(2, default_n(pot)))) {
    const auto set = find_resonances(cell, n, emin, emax, q);
    if (set.all_pass) note += "# n=" + std::to_string(n) + ": reflection vanishes identically, every E > 0 transmits\n";
    for (const auto& w : set.warnings) note += "# warning: " + w + "\n";
    for (const auto& r : set.resonances) {
      t.row({std::to_string(n), num(r.E), to_string(r.origin), num(r.abs_R)});
    }
  }
  return t;
}

inline BoundaryConditions boundary_from(const Options& o) {
  const double al = BoundaryConditions::parse_angle(o.alpha, false);
  const double be = BoundaryConditions::parse_angle(o.beta, true);
  return BoundaryConditions(al, be);
}

inline Table sl_table(const Options& o) {
  const auto pot = load_potential(o.pot_file);
  const auto cell = cell_of(pot);
  const auto bc = boundary_from(o);
  const double emax = need(o.emax, "--emax");
  const double emin = std::isnan(o.emin) ? std::min(cell.min_value(), 0.0) - 1.0 : o.emin;
  if (!(emin < emax)) throw UsageError("sl: need --emin < --emax");
  Table t({"n", "j", "E"});
  for (int n : n_values(o, default_n(pot))) {
    const auto spec = sl_eigenvalues(NCellPotential(cell, n).layout(), bc, emin, emax);
    long j = sl_count(NCellPotential(cell, n).layout(), bc, emin);
    for (double e : spec.eigenvalues) t.row({std::to_string(n), std::to_string(++j), num(e)});
  }
  return t;
}

inline Table periodic_table(const Options& o) {
  const auto pot = load_potential(o.pot_file);
  const auto cell = cell_of(pot);
  const double emax = need(o.emax, "--emax");
  const Flavor fl = o.flavor == "skew" ? Flavor::skew : Flavor::periodic;
  const auto q = Quasimomentum::scan(cell, emax, o.grid);
  Table t({"n", "E", "multiplicity"});
  for (int n : n_values(o, default_n(pot))) {
    for (const auto& e : periodic_eigenvalues(q, n, fl, emax)) {
      if (!std::isnan(o.emin) && e.E < o.emin) continue;
      t.row({std::to_string(n), num(e.E), std::to_string(e.multiplicity)});
    }
  }
  return t;
}

inline std::string count_line(const Options& o) {
  const auto pot = load_potential(o.pot_file);
  const double E = need(o.energy, "--E");
  if (E > 0.0) throw UsageError("count: --E must be <= 0");
  if (auto h = std::get_if<HeteroPotential>(&pot)) {
    if (!o.n_text.empty()) throw UsageError("count: --n does not apply to a hetero potential");
    return std::to_string(count_bound_states(*h, E)) + "\n";
  }
  const auto ns = n_values(o, default_n(pot));
  if (ns.size() != 1) throw UsageError("count: --n takes a single value");
  return std::to_string(count_bound_states(NCellPotential(cell_of(pot), ns.front()), E)) + "\n";
}

inline void write(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out_file.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out_file);
  if (!f) throw UsageError("cannot write " + o.out_file);
  f << text;
}

}  // namespace detail

/// Runs the command line; output goes to `out`, diagnostics to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectra, scattering and counting bounds for n-cell potentials", "ncell"};
  app.require_subcommand(1);
  Options o;

  auto* bands = app.add_subcommand("bands", "Bloch zones of the periodic extension");
  detail::add_common(bands, o, false);
  bands->add_option("--emax", o.emax)->required();
  bands->add_option("--grid", o.grid)->check(CLI::Range(100, 10000000));

  auto* scatter = app.add_subcommand("scatter", "transmission and reflection on an energy grid");
  detail::add_common(scatter, o, true);
  scatter->add_option("--emin", o.emin);
  scatter->add_option("--emax", o.emax)->required();
  scatter->add_option("--grid", o.grid)->check(CLI::Range(1, 10000000));

  auto* res = app.add_subcommand("resonances", "energies of perfect transmission");
  detail::add_common(res, o, true);
  res->add_option("--emin", o.emin);
  res->add_option("--emax", o.emax)->required();
  res->add_option("--grid", o.grid)->check(CLI::Range(100, 10000000));

  auto* sl = app.add_subcommand("sl", "eigenvalues on [0, n a] with separated boundary conditions");
  detail::add_common(sl, o, true);
  sl->add_option("--alpha", o.alpha, "radians, dirichlet or neumann");
  sl->add_option("--beta", o.beta, "radians, dirichlet or neumann");
  sl->add_option("--emin", o.emin);
  sl->add_option("--emax", o.emax)->required();

  auto* per = app.add_subcommand("periodic", "periodic or skew-periodic eigenvalues on [0, n a]");
  detail::add_common(per, o, true);
  per->add_option("--flavor", o.flavor)->check(CLI::IsMember({"periodic", "skew"}));
  per->add_option("--emin", o.emin);
  per->add_option("--emax", o.emax)->required();
  per->add_option("--grid", o.grid)->check(CLI::Range(100, 10000000));

  auto* count = app.add_subcommand("count", "number of bound states below E (E <= 0)");
  detail::add_common(count, o, true);
  count->add_option("--E", o.energy)->required();

  auto* verify = app.add_subcommand("verify", "run a verification campaign");
  verify->add_option("--suite", o.suite)
      ->check(CLI::IsMember({"theorem1", "theorem2", "periodic", "density", "theorem3", "all"}));
  verify->add_option("--seed", o.seed);
  verify->add_option("--out", o.out_file);
  verify->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  verify->add_flag("--all-records", o.all_records, "include passing records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*verify) {
      Campaign c;
      c.seed = o.seed;
      const auto rep = run_suite(o.suite, c);
      detail::write(o, o.format == "json" ? report_json(rep, o.all_records)
                                          : report_csv(rep, o.all_records),
                    out);
      if (!rep.ok()) {
        err << "verify: " << rep.fail_count() << " failing record(s)\n";
        return kCheckFailed;
      }
      return kOk;
    }
    if (*count) {
      detail::write(o, detail::count_line(o), out);
      return kOk;
    }
    std::string note;
    detail::Table t({});
    if (*bands) t = detail::bands_table(o);
    else if (*scatter) t = detail::scatter_table(o);
    else if (*res) t = detail::resonance_table(o, note);
    else if (*sl) t = detail::sl_table(o);
    else t = detail::periodic_table(o);
    detail::write(o, t.render(o.format) + (o.format == "csv" ? note : ""), out);
    if (o.format == "json" && !note.empty()) err << note;
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

}  // namespace ncell::cli
