#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include "ncell/io.hpp"
#include "ncell/potential.hpp"

using namespace ncell;

namespace {

CellPotential barrier() { return build_cell(1.0, {{0.0, 0.5, 10.0}, {0.5, 1.0, 0.0}}); }

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(CellPotential, FreeCellIsZero) {
  auto c = build_cell(1.0, {{0.0, 1.0, 0.0}});
  EXPECT_TRUE(c.is_zero());
  EXPECT_DOUBLE_EQ(c.evaluate(0.3), 0.0);
}

TEST(CellPotential, BarrierEvaluatesHalfOpen) {
  auto c = barrier();
  EXPECT_EQ(c.evaluate(0.0), 10.0);
  EXPECT_EQ(c.evaluate(0.49), 10.0);
  EXPECT_EQ(c.evaluate(0.5), 0.0);
  EXPECT_EQ(c.evaluate(1.0), 0.0);
  EXPECT_EQ(c.min_value(), 0.0);
  EXPECT_EQ(c.max_value(), 10.0);
}

TEST(CellPotential, SegmentsAreSortedOnBuild) {
  auto c = build_cell(1.0, {{0.5, 1.0, 2.0}, {0.0, 0.5, 1.0}});
  ASSERT_EQ(c.segments().size(), 2u);
  EXPECT_EQ(c.segments()[0].v, 1.0);
}

TEST(CellPotential, OverlapNamesTheInterval) {
  const auto msg = message_of([] { build_cell(1.0, {{0.0, 0.6, 0.0}, {0.3, 1.0, 5.0}}); });
  EXPECT_NE(msg.find("overlap at [0.3,0.6]"), std::string::npos) << msg;
}

TEST(CellPotential, GapAndWidthErrors) {
  EXPECT_THROW(build_cell(1.0, {{0.0, 0.4, 0.0}, {0.5, 1.0, 0.0}}), ValidationError);
  EXPECT_THROW(build_cell(1.0, {{0.0, 0.5, 0.0}, {0.5, 0.5, 0.0}, {0.5, 1.0, 0.0}}),
               ValidationError);
  EXPECT_THROW(build_cell(1.0, {{0.0, 1.0, NAN}}), ValidationError);
  EXPECT_THROW(build_cell(1.0, {{0.0, 0.9, 1.0}}), ValidationError);
  EXPECT_THROW(build_cell(-1.0, {{0.0, 1.0, 0.0}}), ValidationError);
}

TEST(CellPotential, RefineKeepsValues) {
  auto c = barrier();
  auto r = refine(c, 4);
  EXPECT_EQ(r.segments().size(), 8u);
  for (double x : {0.0, 0.13, 0.49, 0.5, 0.77})
    EXPECT_EQ(r.evaluate(x), c.evaluate(x));
}

TEST(CellPotential, SampleCellUsesMidpoints) {
  auto c = sample_cell(2.0, [](double x) { return x * x; }, 4);
  EXPECT_EQ(c.segments().size(), 4u);
  EXPECT_DOUBLE_EQ(c.evaluate(0.1), 0.25 * 0.25);
}

TEST(NCellPotential, PeriodicCopies) {
  auto zero = build_cell(1.0, {{0.0, 1.0, 0.0}});
  EXPECT_EQ(assemble_n_cell(zero, 5).evaluate(3.7), 0.0);
  auto p = assemble_n_cell(barrier(), 3);
  EXPECT_EQ(p.evaluate(1.2), 10.0);
  EXPECT_EQ(p.evaluate(2.7), 0.0);
  EXPECT_EQ(p.evaluate(-0.1), 0.0);
  EXPECT_EQ(p.evaluate(3.0), 0.0);
  EXPECT_EQ(p.evaluate(3.2), 0.0);
  EXPECT_DOUBLE_EQ(p.length(), 3.0);
  EXPECT_THROW(assemble_n_cell(zero, 0), std::domain_error);
}

TEST(NCellPotential, LayoutRepeatsCell) {
  auto lay = assemble_n_cell(barrier(), 4).layout();
  EXPECT_EQ(lay.pieces.size(), 8u);
  EXPECT_DOUBLE_EQ(lay.length(), 4.0);
}

TEST(PeriodicExtension, WrapsBothDirections) {
  PeriodicExtension p(barrier());
  EXPECT_EQ(p.evaluate(-0.8), 10.0);
  EXPECT_EQ(p.evaluate(7.25), 10.0);
  EXPECT_EQ(p.evaluate(7.75), 0.0);
}

TEST(HeteroPotential, AdjacentWellsAreValid) {
  auto h = assemble_hetero({HeteroCell::build(0.0, 1.0, {{0.0, 1.0, -4.0}}),
                            HeteroCell::build(1.0, 2.0, {{1.0, 2.0, -3.0}})});
  ASSERT_EQ(h.cut_points().size(), 1u);
  EXPECT_EQ(h.cut_points()[0], 1.0);
  EXPECT_EQ(h.evaluate(0.5), -4.0);
  EXPECT_EQ(h.evaluate(1.5), -3.0);
}

TEST(HeteroPotential, OverlapRejected) {
  EXPECT_THROW(assemble_hetero({HeteroCell::build(0.0, 2.0, {{0.0, 2.0, -1.0}}),
                                HeteroCell::build(1.0, 3.0, {{1.0, 3.0, -1.0}})}),
               ValidationError);
}

TEST(HeteroPotential, SingleCellMatchesCell) {
  auto cell = barrier();
  auto h = assemble_hetero({place_cell(cell, 0.0)});
  for (double x : {0.1, 0.6, 0.99}) EXPECT_EQ(h.evaluate(x), cell.evaluate(x));
  EXPECT_TRUE(h.cut_points().empty());
}

TEST(HeteroPotential, SpacesBecomeZeroPieces) {
  auto h = assemble_hetero({place_cell(barrier(), 0.0), place_cell(barrier(), 3.0)});
  auto lay = h.layout();
  EXPECT_DOUBLE_EQ(lay.length(), 4.0);
  EXPECT_EQ(lay.pieces.size(), 5u);
}

TEST(Io, ParsesEachKind) {
  auto c = parse_potential(R"({"kind":"cell","a":1,"segments":[[0,1,0]]})");
  EXPECT_TRUE(std::get<CellPotential>(c).is_zero());
  auto n = parse_potential(
      R"({"kind":"ncell","n":8,"cell":{"kind":"cell","a":1,"segments":[[0,0.5,10],[0.5,1,0]]}})");
  EXPECT_EQ(std::get<NCellPotential>(n).n(), 8);
  auto h = parse_potential(
      R"({"kind":"hetero","cells":[{"x_lo":0,"x_hi":1,"segments":[[0,1,-1]]},{"x_lo":2,"x_hi":3,"segments":[[2,3,-2]]}]})");
  EXPECT_EQ(std::get<HeteroPotential>(h).size(), 2u);
}

TEST(Io, NegativeLengthIsSemanticError) {
  const auto msg = message_of(
      [] { parse_potential(R"({"kind":"cell","a":-1,"segments":[[0,1,0]]})"); });
  EXPECT_NE(msg.find("a must be positive"), std::string::npos) << msg;
}

TEST(Io, SchemaErrorsCarryLocation) {
  const auto msg = message_of([] {
    parse_potential(R"({"kind":"hetero","cells":[{"x_hi":1,"segments":[[0,1,-1]]}]})");
  });
  EXPECT_NE(msg.find("$.cells[0]"), std::string::npos) << msg;
  EXPECT_THROW(parse_potential("{not json"), ParseError);
  EXPECT_THROW(parse_potential(R"({"kind":"blob"})"), ParseError);
  EXPECT_THROW(parse_potential(R"({"kind":"cell","a":1,"segments":[[0,1]]})"), ParseError);
}

TEST(Io, RoundTrip) {
  AnyPotential p = NCellPotential(barrier(), 3);
  auto back = parse_potential(save_potential(p));
  EXPECT_EQ(std::get<NCellPotential>(back).cell(), barrier());
  EXPECT_EQ(std::get<NCellPotential>(back).n(), 3);
}

TEST(Io, LoadsSampleFiles) {
  auto kp = load_potential(std::string(NCELL_DATA_DIR) + "/kp.json");
  EXPECT_EQ(cell_of(kp), barrier());
  auto chain = load_potential(std::string(NCELL_DATA_DIR) + "/chain3.json");
  EXPECT_EQ(std::get<HeteroPotential>(chain).size(), 3u);
  EXPECT_THROW(load_potential("/nonexistent/file.json"), ParseError);
}
