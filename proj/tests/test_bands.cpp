#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncell/bands.hpp"
#include "oracle/finite_difference.hpp"

using namespace ncell;

namespace {

CellPotential free_cell() { return build_cell(1.0, {{0.0, 1.0, 0.0}}); }
CellPotential kp() { return build_cell(1.0, {{0.0, 0.5, 10.0}, {0.5, 1.0, 0.0}}); }
CellPotential well() { return build_cell(1.0, {{0.0, 1.0, -4.0}}); }

}  // namespace

TEST(Discriminant, FreeValues) {
  EXPECT_NEAR(discriminant(free_cell(), kPi * kPi / 4), 0.0, 1e-14);
  EXPECT_NEAR(discriminant(free_cell(), kPi * kPi), -2.0, 1e-14);
}

TEST(Discriminant, KronigPenneyAgainstRk4) {
  for (double E : {1.0, 7.5, 30.0}) {
    auto o = oracle::rk4_transfer(kp().layout(), E);
    EXPECT_NEAR(discriminant(kp(), E), o.m11 + o.m22, 1e-8) << E;
  }
}

TEST(ScanZones, FreeCellHasOnlyClosedGaps) {
  auto t = scan_zones(free_cell(), 50.0);
  EXPECT_EQ(t.zones.front().kind, ZoneKind::forbidden);
  EXPECT_NEAR(t.lambda0(), 0.0, 1e-12);
  for (std::size_t i = 1; i < t.zones.size(); ++i)
    if (t.zones[i].kind == ZoneKind::forbidden) EXPECT_TRUE(t.zones[i].closed);
  auto merged = t.merged_allowed();
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_NEAR(merged[0].E_lo, 0.0, 1e-12);
  EXPECT_EQ(merged[0].E_hi, 50.0);
  EXPECT_TRUE(merged[0].truncated);
  // Closed gaps sit at (m pi)^2 to full precision.
  EXPECT_NEAR(t.zones[2].E_lo, kPi * kPi, 1e-12);
  EXPECT_NEAR(t.zones[4].E_lo, 4 * kPi * kPi, 1e-11);
}

TEST(ScanZones, WellEdgesSitOnTraceTwo) {
  auto t = scan_zones(well(), 40.0);
  int expected_index = 0;
  for (std::size_t i = 0; i < t.zones.size(); ++i) {
    const auto& z = t.zones[i];
    EXPECT_EQ(z.kind, i % 2 == 0 ? ZoneKind::forbidden : ZoneKind::allowed);
    if (z.kind == ZoneKind::forbidden) EXPECT_EQ(z.index, expected_index++);
  }
  for (double e : t.edges()) EXPECT_LT(std::abs(std::abs(discriminant(well(), e)) - 2.0), 1e-8);
}

TEST(ScanZones, StableUnderGridDoubling) {
  auto a = scan_zones(kp(), 60.0, 2000);
  auto b = scan_zones(kp(), 60.0, 4000);
  ASSERT_EQ(a.zones.size(), b.zones.size());
  for (std::size_t i = 0; i < a.zones.size(); ++i) {
    EXPECT_NEAR(a.zones[i].E_hi, b.zones[i].E_hi, 1e-10);
  }
}

TEST(ScanZones, Preconditions) {
  EXPECT_THROW(scan_zones(kp(), 60.0, 10), std::domain_error);
  EXPECT_THROW(scan_zones(kp(), -5.0), std::domain_error);
}

TEST(ZoneTable, ZoneAtAndCeiling) {
  auto t = scan_zones(kp(), 60.0);
  EXPECT_EQ(t.zone_at(-100.0).kind, ZoneKind::forbidden);
  EXPECT_EQ(t.zone_at(t.lambda0() + 1e-6).kind, ZoneKind::allowed);
  EXPECT_THROW(t.zone_at(61.0), RangeError);
  EXPECT_TRUE(t.in_forbidden_closure(t.lambda0()));
  EXPECT_FALSE(t.in_open_gap(t.lambda0()));
}

TEST(Quasimomentum, FreeIsSquareRoot) {
  auto q = Quasimomentum::scan(free_cell(), 50.0);
  EXPECT_NEAR(q(0.0), 0.0, 1e-7);
  EXPECT_NEAR(q(kPi * kPi / 4), kPi / 2, 1e-9);
  EXPECT_NEAR(q(kPi * kPi), kPi, 1e-9);
  EXPECT_NEAR(q(4 * kPi * kPi), 2 * kPi, 1e-9);
  EXPECT_EQ(q(-3.0), 0.0);
  for (double E = 0.5; E < 50.0; E += 0.37) EXPECT_NEAR(q(E), std::sqrt(E), 1e-9) << E;
  EXPECT_THROW(q(51.0), RangeError);
}

TEST(Quasimomentum, PlateausInGapsAndMonotone) {
  auto q = Quasimomentum::scan(kp(), 120.0);
  for (const auto& z : q.zones().zones) {
    if (z.kind != ZoneKind::forbidden) continue;
    const double mid = std::isinf(z.E_lo) ? z.E_hi - 1.0 : 0.5 * (z.E_lo + z.E_hi);
    EXPECT_NEAR(q.phase(mid), z.index * kPi, 1e-9);
  }
  double prev = -1.0;
  for (double E = -5.0; E <= 120.0; E += 0.05) {
    const double p = q.phase(E);
    EXPECT_GE(p, prev - 1e-12);
    prev = p;
  }
}

TEST(BlochPhase, IdentityInBands) {
  auto q = Quasimomentum::scan(kp(), 120.0);
  std::mt19937_64 rng(5);
  int checked = 0;
  for (const auto& z : q.zones().zones) {
    if (!z.is_allowed()) continue;
    std::uniform_real_distribution<double> u(z.E_lo, z.E_hi);
    for (int i = 0; i < 12; ++i) {
      const double E = u(rng);
      EXPECT_NEAR(2.0 * std::cos(bloch_phase(q, E)), discriminant(kp(), E), 1e-9);
      ++checked;
    }
  }
  EXPECT_GE(checked, 48);
  for (double e : q.zones().edges())
    EXPECT_NEAR(std::abs(std::cos(bloch_phase(q, e))), 1.0, 1e-9);
  const auto& gap = q.zones().zones[2];
  EXPECT_THROW(bloch_phase(q, 0.5 * (gap.E_lo + gap.E_hi)), std::domain_error);
}

TEST(Quasimomentum, ScalingCovariance) {
  // x -> x / s and E -> s^2 E map the zone structure onto itself.
  const double s = 2.0;
  auto wide = build_cell(s, {{0.0, 0.5 * s, 10.0 / (s * s)}, {0.5 * s, s, 0.0}});
  auto q1 = Quasimomentum::scan(kp(), 60.0);
  auto q2 = Quasimomentum::scan(wide, 60.0 / (s * s));
  for (double E : {5.0, 20.0, 47.0}) EXPECT_NEAR(q1.phase(E), q2.phase(E / (s * s)), 1e-9);
}
