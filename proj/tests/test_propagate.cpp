#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncell/propagate.hpp"
#include "oracle/finite_difference.hpp"

using namespace ncell;

namespace {

CellPotential barrier() { return build_cell(1.0, {{0.0, 0.5, 10.0}, {0.5, 1.0, 0.0}}); }

// Sign changes of psi along an RK4 integration with `per_unit` steps per unit length.
long dense_sign_changes(const Layout& lay, double E, double psi0, double dpsi0, int per_unit) {
  long changes = 0;
  double y = psi0, z = dpsi0;
  for (const auto& p : lay.pieces) {
    const int steps = static_cast<int>(std::ceil(p.width * per_unit));
    const double h = p.width / steps, q = p.v - E;
    for (int s = 0; s < steps; ++s) {
      const double k1y = z, k1z = q * y;
      const double k2y = z + 0.5 * h * k1z, k2z = q * (y + 0.5 * h * k1y);
      const double k3y = z + 0.5 * h * k2z, k3z = q * (y + 0.5 * h * k2y);
      const double k4y = z + h * k3z, k4z = q * (y + h * k3y);
      const double yn = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
      z += h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z);
      if (yn != 0.0 && y != 0.0 && (yn < 0.0) != (y < 0.0)) ++changes;
      if (yn != 0.0) y = yn;
    }
  }
  return changes;
}

}  // namespace

TEST(SegmentPropagator, HalfPeriodRotation) {
  auto m = segment_propagator(0.0, kPi * kPi, 1.0);
  EXPECT_NEAR(m.m11, -1.0, 1e-15);
  EXPECT_NEAR(m.m12, 0.0, 1e-15);
  EXPECT_NEAR(m.m21, 0.0, 1e-14);
  EXPECT_NEAR(m.m22, -1.0, 1e-15);
}

TEST(SegmentPropagator, ThresholdIsShear) {
  auto m = segment_propagator(3.0, 3.0, 0.7);
  EXPECT_EQ(m.m11, 1.0);
  EXPECT_EQ(m.m12, 0.7);
  EXPECT_EQ(m.m21, 0.0);
  EXPECT_EQ(m.m22, 1.0);
}

TEST(SegmentPropagator, EvanescentEntries) {
  const double kap = std::sqrt(10.0), w = 0.5;
  auto m = segment_propagator(10.0, 0.0, w);
  EXPECT_DOUBLE_EQ(m.m11, std::cosh(kap * w));
  EXPECT_DOUBLE_EQ(m.m12, std::sinh(kap * w) / kap);
  EXPECT_DOUBLE_EQ(m.m21, kap * std::sinh(kap * w));
  EXPECT_NEAR(m.det(), 1.0, 1e-12);
  EXPECT_THROW(segment_propagator(0.0, 1.0, -1.0), std::domain_error);
}

TEST(Transfer, FreeQuarterTurn) {
  auto m = cell_transfer(build_cell(1.0, {{0.0, 1.0, 0.0}}), kPi * kPi / 4);
  EXPECT_NEAR(m.m11, 0.0, 1e-15);
  EXPECT_NEAR(m.m12, 2.0 / kPi, 1e-15);
  EXPECT_NEAR(m.m21, -kPi / 2, 1e-15);
  EXPECT_NEAR(m.m22, 0.0, 1e-15);
}

TEST(Transfer, BarrierIsOrderedProduct) {
  auto m = cell_transfer(barrier(), 1.0);
  auto p = segment_propagator(0.0, 1.0, 0.5) * segment_propagator(10.0, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(m.m11, p.m11);
  EXPECT_DOUBLE_EQ(m.m21, p.m21);
  const auto o = oracle::rk4_transfer(barrier().layout(), 1.0);
  EXPECT_NEAR(m.m11, o.m11, 1e-8);
  EXPECT_NEAR(m.m12, o.m12, 1e-8);
  EXPECT_NEAR(m.m21, o.m21, 1e-8);
  EXPECT_NEAR(m.m22, o.m22, 1e-8);
}

TEST(Transfer, UnitDeterminantOnRandomCells) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(-30.0, 30.0), e(-20.0, 80.0);
  for (int t = 0; t < 200; ++t) {
    auto c = build_cell(1.0, {{0.0, 0.25, v(rng)}, {0.25, 0.625, v(rng)}, {0.625, 1.0, v(rng)}});
    auto m = cell_transfer(c, e(rng));
    // Cancellation in m11 m22 - m12 m21 scales with the size of the products.
    const double scale = std::abs(m.m11 * m.m22) + std::abs(m.m12 * m.m21);
    EXPECT_NEAR(m.det(), 1.0, 1e-14 * scale + 1e-13);
  }
}

TEST(Transfer, AgreesWithRk4OnRandomCells) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(-20.0, 20.0), e(-10.0, 40.0);
  for (int t = 0; t < 20; ++t) {
    auto c = build_cell(1.0, {{0.0, 0.375, v(rng)}, {0.375, 1.0, v(rng)}});
    const double E = e(rng);
    auto m = cell_transfer(c, E);
    auto o = oracle::rk4_transfer(c.layout(), E);
    const double scale = std::max({1.0, std::abs(m.m11), std::abs(m.m12), std::abs(m.m21), std::abs(m.m22)});
    EXPECT_NEAR(m.m11, o.m11, 1e-8 * scale);
    EXPECT_NEAR(m.m12, o.m12, 1e-8 * scale);
    EXPECT_NEAR(m.m21, o.m21, 1e-8 * scale);
    EXPECT_NEAR(m.m22, o.m22, 1e-8 * scale);
  }
}

TEST(Transfer, PowerMatchesRepeatedProduct) {
  auto m = cell_transfer(barrier(), 7.3);
  auto direct = TransferMatrix::identity(7.3);
  for (int i = 0; i < 7; ++i) direct = m * direct;
  auto p = power(m, 7);
  EXPECT_NEAR(p.m11, direct.m11, 1e-10);
  EXPECT_NEAR(p.m12, direct.m12, 1e-10);
  EXPECT_DOUBLE_EQ(p.x_hi - p.x_lo, 7.0);
  EXPECT_THROW(power(m, -1), std::domain_error);
}

TEST(PropagatePhase, FreeCosineHasOneZero) {
  Layout free;
  free.pieces.push_back({1.0, 0.0});
  auto [end, trace] = propagate_phase(free, kPi * kPi, {1.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(trace.delta(), -kPi, 1e-12);
  EXPECT_EQ(trace.node_count, 1);
  EXPECT_NEAR(end.psi, -1.0, 1e-12);
}

TEST(PropagatePhase, GrowingExponentialHasNoZero) {
  Layout free;
  free.pieces.push_back({1.0, 0.0});
  auto [end, trace] = propagate_phase(free, -1.0, {1.0, 1.0, 0.0}, 5.0);
  EXPECT_EQ(trace.node_count, 0);
  EXPECT_NEAR(end.psi, std::exp(5.0), 1e-9 * std::exp(5.0));
}

TEST(PropagatePhase, ZeroDataRejected) {
  Layout free;
  free.pieces.push_back({1.0, 0.0});
  EXPECT_THROW(propagate_phase(free, 1.0, {0.0, 0.0, 0.0}, 1.0), std::domain_error);
}

TEST(PropagatePhase, ManyTurnsCountedExactly) {
  Layout free;
  free.pieces.push_back({1.0, 0.0});
  for (int m = 1; m <= 40; ++m) {
    const double k = (m + 0.5) * kPi;
    auto trace = sweep_phase(free, k * k, 0.0, 1.0).second;
    EXPECT_EQ(trace.node_count, m) << "k=" << k;
  }
}

TEST(PropagatePhase, BarrierNodesMatchDenseSignChanges) {
  const auto lay = barrier().layout();
  for (double E : {3.0, 25.0, 60.0, 140.0}) {
    auto trace = propagate_phase(lay, E, {1.0, 0.0, 0.0}, 1.0).second;
    EXPECT_EQ(trace.node_count, dense_sign_changes(lay, E, 1.0, 0.0, 100000)) << "E=" << E;
  }
}

TEST(PropagatePhase, SweepAndPositionalAgree) {
  auto lay = NCellPotential(barrier(), 5).layout();
  for (double E : {-2.0, 4.0, 30.0}) {
    auto a = sweep_phase(lay, E, 0.3, 1.0).second;
    auto b = propagate_phase(lay, E, {0.3, 1.0, 0.0}, 5.0).second;
    EXPECT_NEAR(a.theta_end, b.theta_end, 1e-9);
    EXPECT_EQ(a.node_count, b.node_count);
  }
}

TEST(TailNodes, CaseTable) {
  EXPECT_EQ(tail_nodes({1.0, 0.0, 0.0}, -1.0).extra_nodes, 0);
  EXPECT_EQ(tail_nodes({1.0, -2.0, 0.0}, -1.0).extra_nodes, 1);
  EXPECT_EQ(tail_nodes({1.0, -0.5, 0.0}, 0.0).extra_nodes, 1);
  EXPECT_EQ(tail_nodes({-1.0, 2.0, 0.0}, -1.0).extra_nodes, 1);
  EXPECT_EQ(tail_nodes({-1.0, -0.5, 0.0}, -1.0).extra_nodes, 0);
  EXPECT_THROW(tail_nodes({1.0, 0.0, 0.0}, 0.5), std::domain_error);
}

TEST(JostCount, FreeHasNoBoundStates) {
  Layout free;
  free.pieces.push_back({3.0, 0.0});
  for (double E : {-10.0, -1.0, -1e-6, 0.0}) EXPECT_EQ(jost_node_count(free, E), 0);
  EXPECT_THROW(jost_node_count(free, 1.0), std::domain_error);
}

TEST(JostCount, SquareWellsAgainstBoxOracle) {
  for (double v : {-4.0, -25.0}) {
    auto lay = build_cell(1.0, {{0.0, 1.0, v}}).layout();
    const long ours = jost_node_count(lay, -1e-9);
    const long fd = oracle::bound_count_below(lay, -1e-9, 1.0 / 128, 20.0);
    EXPECT_EQ(ours, fd) << "v=" << v;
  }
  EXPECT_EQ(jost_node_count(build_cell(1.0, {{0.0, 1.0, -4.0}}).layout(), 0.0), 1);
  EXPECT_EQ(jost_node_count(build_cell(1.0, {{0.0, 1.0, -25.0}}).layout(), 0.0), 2);
}
