#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "sketchgen/geometry.h"
#include "sketchgen/synth.h"

namespace sketchgen {

using testing::Circle;
using testing::ConstrainedSquare;
using testing::Line;
using testing::Square;

namespace {

Sketch Of(std::initializer_list<Object> objects) {
  Sketch s;
  s.objects = objects;
  return s;
}

double MaxAbs(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("residuals: coincident on identical points") {
  const Sketch s = Of({Entity{PointEntity{false, {0.3, 0.4}}}, Entity{PointEntity{false, {0.3, 0.4}}},
                       Constraint{CoincidentConstraint{{0, 2}}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  const auto r = sys.Evaluate(sys.params);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
}

TEST_CASE("residuals: perpendicular on identical lines is |dot| = 1") {
  const Sketch s = Of({Line(0, 0, 1, 0), Line(0, 0, 1, 0), Constraint{PerpendicularConstraint{0, 3}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  const auto r = sys.Evaluate(sys.params);
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0]) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("residuals: parallel on equal directions is 0") {
  const Sketch s = Of({Line(0, 0, 1, 0), Line(0, 1, 2, 1), Constraint{ParallelConstraint{{0, 3}}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  CHECK(sys.Evaluate(sys.params) == std::vector<double>{0.0});
}

TEST_CASE("residuals: constructively satisfied fixtures are zero") {
  const double r = 0.4;
  Sketch s = Of({Line(-1, 0.5 + r, 1, 0.5 + r), Circle(0.2, 0.5, r),
                 Constraint{TangentConstraint{0, 3}}, Constraint{RadiusConstraint{3, r}},
                 Constraint{DiameterConstraint{3, 2 * r}}, Constraint{LengthConstraint{0, 2.0}},
                 Constraint{HorizontalConstraint{{0}}},
                 Constraint{DistanceConstraint{1, 2, Direction::kHorizontal, 2.0, Alignment::kAligned}},
                 Constraint{AngleConstraint{0, 0, 0.0}}});
  s.objects.push_back(Entity{PointEntity{false, {0.0, 0.5 + r}}});
  s.objects.push_back(Constraint{MidpointConstraint{6, MidpointEntityRef{0}}});
  s.objects.push_back(Constraint{CoincidentConstraint{{0, 6}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  CHECK(MaxAbs(sys.Evaluate(sys.params)) < 1e-12);
}

TEST_CASE("residuals: mirror across the y axis") {
  const Sketch s = Of({Line(0, -1, 0, 1, true), Entity{PointEntity{false, {0.3, 0.2}}},
                       Entity{PointEntity{false, {-0.3, 0.2}}}, Circle(0.5, 0.1, 0.2), Circle(-0.5, 0.1, 0.2),
                       Constraint{MirrorConstraint{0, {{3, 5}, {7, 9}}}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  CHECK(MaxAbs(sys.Evaluate(sys.params)) < 1e-12);
}

TEST_CASE("residuals: incompatible pointee is a typed error") {
  const Sketch s = Of({Line(0, 0, 1, 0), Constraint{RadiusConstraint{0, 0.5}}});
  CHECK_THROWS_AS(ConstraintResiduals(s), GeometryError);
  const Sketch t = Of({Line(0, 0, 1, 0), Circle(0, 0, 1), Constraint{ParallelConstraint{{0, 3}}}});
  CHECK_THROWS_AS(ConstraintResiduals(t), GeometryError);
  const SolveResult r = Solve(s);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.error.find("radius") != std::string::npos);
  CHECK(r.sketch == s);
}

TEST_CASE("residuals: fix freezes parameters") {
  const Sketch s = Of({Line(0, 0, 1, 0), Circle(0, 0, 1), Constraint{FixConstraint{{1, 4}}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  CHECK(sys.frozen == std::vector<char>{1, 1, 0, 0, 1, 1, 0});
}

TEST_CASE("residuals: arc endpoints share a radius") {
  const Sketch s =
      Of({Entity{CircleArcEntity{false, {0, 0}, ArcParams{{1, 0}, {0, 2}, false}}}});
  const ResidualSystem sys = ConstraintResiduals(s);
  REQUIRE(sys.block_labels == std::vector<std::string>{"arc_radius"});
  CHECK(sys.Evaluate(sys.params)[0] == doctest::Approx(-1.0));
}

TEST_CASE("solve: already satisfied is unchanged with 0 iterations") {
  const Sketch s = ConstrainedSquare(-0.5, 0.5);
  const SolveResult res = Solve(s);
  CHECK(res.report.converged);
  CHECK(res.report.iterations == 0);
  CHECK(res.sketch == s);
}

TEST_CASE("solve: jittered unit square converges") {
  Sketch s = ConstrainedSquare(0.0, 1.0);
  std::get<LineEntity>(std::get<Entity>(s.objects[1])).start = {1.05, -0.03};
  const SolveResult res = Solve(s);
  CHECK(res.report.converged);
  CHECK(res.report.max_residual < 1e-9);
  CHECK(res.report.iterations <= 50);
  CHECK(res.report.initial_max_residual > 0.01);
  const auto& l0 = std::get<LineEntity>(std::get<Entity>(res.sketch.objects[0]));
  const auto& l1 = std::get<LineEntity>(std::get<Entity>(res.sketch.objects[1]));
  CHECK(std::abs(l0.end.x - l1.start.x) < 1e-9);
  CHECK(std::abs(l0.end.y - l1.start.y) < 1e-9);
}

TEST_CASE("solve: parallel plus perpendicular is unsolvable") {
  const Sketch s = Of({Line(0, 0, 1, 0), Line(0, 1, 1, 1.5), Constraint{ParallelConstraint{{0, 3}}},
                       Constraint{PerpendicularConstraint{0, 3}}});
  const SolveResult res = Solve(s);
  CHECK_FALSE(res.report.converged);
  CHECK(res.report.max_residual > 0.5);
}

TEST_CASE("solve: fixed line stays put") {
  Sketch s = Of({Line(0, 0, 1, 0), Line(0, 0.2, 1, 0.5), Constraint{FixConstraint{{0}}},
                 Constraint{ParallelConstraint{{0, 3}}}});
  const SolveResult res = Solve(s);
  CHECK(res.report.converged);
  CHECK(std::get<Entity>(res.sketch.objects[0]) == std::get<Entity>(s.objects[0]));
}

TEST_CASE("render: diagonal at 4x4") {
  const Bitmap b = Render(Of({Line(-1, -1, 1, 1)}), 4);
  Bitmap expected(4, 4);
  for (int i = 0; i < 4; ++i) expected.at(i, i) = 1;
  CHECK(b == expected);
}

TEST_CASE("render: empty sketch, zero resolution, construction") {
  CHECK(Render(Sketch{}, 16).count() == 0);
  CHECK_THROWS(Render(Sketch{}, 0));
  CHECK(Render(Of({Line(-1, -1, 1, 1, true)}), 16).count() == 0);
}

TEST_CASE("render: unit circle is mirror symmetric") {
  const Bitmap b = Render(Of({Circle(0, 0, 1)}), 128);
  CHECK(b.count() > 300);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      REQUIRE(b.at(x, y) == b.at(127 - x, y));
      REQUIRE(b.at(x, y) == b.at(x, 127 - y));
    }
  }
}

TEST_CASE("render: deterministic, Jaccard to self is 0") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Sketch s = RandomSketch(rng);
    const Bitmap a = Render(s, 64);
    CHECK(a == Render(s, 64));
    CHECK(JaccardDistance(a, a) == 0.0);
  }
}

TEST_CASE("render: arc and spline strokes are connected") {
  const Sketch s = Of({Entity{CircleArcEntity{false, {0, 0}, ArcParams{{0.8, 0}, {-0.8, 0}, false}}},
                       Line(-0.8, 0, 0.8, 0)});
  CHECK(CountClosedRegions(Render(s, 128)) == 1);
  InterpolatedSplineEntity sp;
  sp.is_periodic = true;
  sp.interp_points = {{0.5, 0}, {0, 0.5}, {-0.5, 0}, {0, -0.5}};
  CHECK(CountClosedRegions(Render(Of({Entity{sp}}), 128)) == 1);
}

TEST_CASE("closed regions") {
  CHECK(CountClosedRegions(Render(Square(-0.5, 0.5), 128)) == 1);
  CHECK(CountClosedRegions(Bitmap(32, 32)) == 0);
  CHECK(CountClosedRegions(Render(Of({Circle(-0.5, 0, 0.3), Circle(0.5, 0, 0.3)}), 128)) == 2);
  Bitmap ring(5, 5);
  for (int i = 1; i < 4; ++i) ring.at(i, 1) = ring.at(i, 3) = ring.at(1, i) = ring.at(3, i) = 1;
  CHECK(CountClosedRegions(ring) == 1);
}

TEST_CASE("jaccard") {
  Bitmap a(2, 2), b(2, 2);
  CHECK(JaccardDistance(a, b) == 0.0);
  a.at(0, 0) = a.at(1, 0) = 1;
  b.at(1, 0) = b.at(1, 1) = 1;
  CHECK(JaccardDistance(a, b) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("smoothing") {
  Bitmap a(8, 8);
  a.at(3, 4) = 1;
  const auto id = GaussianSmooth(a, 0.0);
  CHECK(id == std::vector<double>(a.pixels.begin(), a.pixels.end()));
  const auto blurred = GaussianSmooth(a, 1.0);
  double total = 0.0;
  for (double v : blurred) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(blurred[4 * 8 + 2] == doctest::Approx(blurred[4 * 8 + 4]));
  Bitmap b(8, 8);
  b.at(4, 4) = 1;
  CHECK(SmoothedL2(a, b, 0.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(SmoothedL2(a, a, 2.0) == 0.0);
}

TEST_CASE("pgm round trip") {
  std::mt19937_64 rng(5);
  const Bitmap b = Render(RandomSketch(rng), 32);
  std::stringstream ss;
  WritePgm(ss, b);
  CHECK(ReadPgm(ss) == b);
  std::stringstream p2("P2\n# c\n2 1\n10\n0 7\n");
  const Bitmap c = ReadPgm(p2);
  CHECK(c.pixels == std::vector<uint8_t>{0, 1});
}

TEST_CASE("svg") {
  const std::string svg = RenderSvg(Of({Circle(0, 0, 0.5), Line(-1, 0, 1, 0, true)}), 100);
  CHECK(svg.find("<circle cx=\"50\" cy=\"50\" r=\"25\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("normalize") {
  const Sketch sq = Normalize(Square(0, 10));
  const auto& l0 = std::get<LineEntity>(std::get<Entity>(sq.objects[0]));
  CHECK(l0.start == Vec2{-1, -1});
  CHECK(l0.end == Vec2{1, -1});
  const auto& l1 = std::get<LineEntity>(std::get<Entity>(sq.objects[1]));
  CHECK(l1.end == Vec2{1, 1});

  const Sketch tight = Of({Line(-1, -1, 1, 1), Circle(0, 0, 0.5)});
  CHECK(Normalize(tight) == tight);

  Sketch m = Of({Line(2, 3, 4, 3), Circle(3, 3, 0.5), Constraint{LengthConstraint{0, 2.0}},
                 Constraint{RadiusConstraint{3, 0.5}}});
  const Sketch n = Normalize(m);
  CHECK(std::get<LengthConstraint>(std::get<Constraint>(n.objects[2])).length == doctest::Approx(2.0));
  CHECK(std::get<RadiusConstraint>(std::get<Constraint>(n.objects[3])).length == doctest::Approx(0.5));
  CHECK(MaxAbs(ConstraintResiduals(n).Evaluate(ConstraintResiduals(n).params)) < 1e-12);

  CHECK_THROWS_AS(Normalize(Of({Entity{PointEntity{false, {1, 1}}}})), GeometryError);
  CHECK_THROWS_AS(Normalize(Sketch{}), GeometryError);
}

TEST_CASE("normalize: idempotent and translation invariant") {
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    const Sketch s = RandomSketch(rng);
    Sketch n;
    try {
      n = Normalize(s);
    } catch (const GeometryError&) {
      continue;
    }
    ++checked;
    const Sketch nn = Normalize(n);
    const BoundingBox a = GeometryBounds(n), b = GeometryBounds(nn);
    CHECK(std::abs(a.min_x - b.min_x) < 1e-9);
    CHECK(std::abs(a.max_y - b.max_y) < 1e-9);
    CHECK(std::max(b.max_x - b.min_x, b.max_y - b.min_y) == doctest::Approx(2.0));
  }
  CHECK(checked > 30);
  const Sketch a = Normalize(Square(0, 1));
  const Sketch b = Normalize(Square(0.25, 1.25));
  CHECK(Render(a, 64) == Render(b, 64));
}

}  // namespace sketchgen
