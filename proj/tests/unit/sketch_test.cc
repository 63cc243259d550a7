#include <doctest.h>

#include <cmath>

#include "fixtures.h"
#include "sketchgen/sketch.h"
#include "sketchgen/sketch_json.h"

namespace sketchgen {

using testing::LinePointSketch;

TEST_CASE("validate: line+point is valid") {
  CHECK(ValidateSketch(LinePointSketch()).empty());
  CHECK(ValidateSketch(LinePointSketch(), Ordering::kConcatenated).empty());
  CHECK(ValidateSketch(Sketch{}).empty());
}

TEST_CASE("validate: at_least bound") {
  Sketch s;
  s.objects.push_back(Constraint{CoincidentConstraint{{0}}});
  const auto report = ValidateSketch(s);
  REQUIRE_FALSE(report.empty());
  bool found = false;
  for (const auto& v : report) found |= v.message.find("at_least") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate: pointer out of range") {
  Sketch s;
  s.objects.push_back(testing::Line(0, 0, 1, 1));
  s.objects.push_back(Constraint{CoincidentConstraint{{1, 7}}});
  const auto report = ValidateSketch(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].object_index == 1);
  CHECK(report[0].message.find("table size 3") != std::string::npos);
}

TEST_CASE("validate: interleaved uses prefix table, concatenated uses full table") {
  Sketch s;
  s.objects.push_back(testing::Line(0, 0, 1, 1));
  s.objects.push_back(Constraint{CoincidentConstraint{{2, 4}}});
  s.objects.push_back(testing::Line(1, 1, 2, 0));
  CHECK_FALSE(ValidateSketch(s, Ordering::kInterleaved).empty());
  CHECK(ValidateSketch(s, Ordering::kConcatenated).empty());
}

TEST_CASE("validate: distance params must follow the handler") {
  Sketch s;
  s.objects.push_back(testing::Line(0, 0, 1, 1));
  DistanceConstraint d{1, 2, Direction::kMinimum, 0.5, Alignment::kAligned};
  s.objects.push_back(Constraint{d});
  CHECK_FALSE(ValidateSketch(s).empty());
  d.params = HalfSpaceParams{HalfSpace::kLeft, HalfSpace::kRight};
  s.objects[1] = Constraint{d};
  CHECK(ValidateSketch(s).empty());
}

TEST_CASE("validate: non-finite and short splines") {
  Sketch s;
  s.objects.push_back(testing::Line(0, NAN, 1, 1));
  CHECK_FALSE(ValidateSketch(s).empty());
  InterpolatedSplineEntity sp;
  sp.interp_points = {{0, 0}};
  s.objects = {Entity{sp}};
  CHECK_FALSE(ValidateSketch(s).empty());
  sp.interp_points.push_back({1, 1});
  s.objects = {Entity{sp}};
  CHECK(ValidateSketch(s).empty());
}

TEST_CASE("referrable parts") {
  CHECK(ReferrableParts(testing::Line(0, 0, 1, 1)) ==
        std::vector<PartRole>{PartRole::kWhole, PartRole::kStart, PartRole::kEnd});
  CHECK(ReferrableParts(testing::Circle(0, 0, 1)) ==
        std::vector<PartRole>{PartRole::kWhole, PartRole::kCenter});
  CHECK(ReferrableParts(Entity{PointEntity{}}) ==
        std::vector<PartRole>{PartRole::kWhole, PartRole::kPoint});
  Entity arc = CircleArcEntity{false, {0, 0}, ArcParams{{1, 0}, {0, 1}, false}};
  CHECK(ReferrableParts(arc).size() == 4);
  CHECK(ReferrableParts(Entity{InterpolatedSplineEntity{}}) ==
        std::vector<PartRole>{PartRole::kWhole, PartRole::kStartPoint, PartRole::kEndPoint});
}

TEST_CASE("referrable table") {
  const Sketch s = LinePointSketch();
  CHECK(BuildReferrableTable(s, 0).size() == 0);
  CHECK(BuildReferrableTable(s, 1).size() == 3);
  const auto table = BuildReferrableTable(s);
  REQUIRE(table.size() == 5);
  CHECK(table.entries[3] == ReferrableEntry{1, 1, 0, PartRole::kWhole});
  // Prefix monotone.
  const auto t1 = BuildReferrableTable(s, 1);
  for (size_t i = 0; i < t1.size(); ++i) CHECK(t1.entries[i] == table.entries[i]);
}

TEST_CASE("value conversion round trip") {
  Sketch s = testing::ConstrainedSquare(-1, 1);
  s.objects.push_back(Entity{CircleArcEntity{true, {0.1, 0.2}, ArcParams{{1, 0}, {0, 1}, true}}});
  InterpolatedSplineEntity sp{false, true, {{0, 0}, {0.5, 0.5}, {1, 0}}, {1, 2}, {3, 4},
                              TrimmedParams{0.5, 2.5}};
  s.objects.push_back(Entity{sp});
  s.objects.push_back(Constraint{MirrorConstraint{0, {{1, 2}, {3, 4}}}});
  s.objects.push_back(Constraint{MidpointConstraint{1, MidpointEntityRef{3}}});
  s.objects.push_back(Constraint{MidpointConstraint{1, MidpointEndpoints{4, 5}}});
  s.objects.push_back(
      Constraint{DistanceConstraint{1, 4, Direction::kVertical, 0.25, Alignment::kAntiAligned}});
  s.objects.push_back(Constraint{AngleConstraint{0, 3, 1.5}});
  CHECK(ValidateSketch(s).empty());
  CHECK(SketchFromValue(SketchToValue(s)) == s);
}

TEST_CASE("json round trip and external constraints") {
  Sketch s = testing::ConstrainedSquare(-0.5, 0.5);
  s.objects.push_back(Constraint{DistanceConstraint{
      1, 4, Direction::kMinimum, 0.25, HalfSpaceParams{HalfSpace::kLeft, HalfSpace::kRight}}});
  const std::string text = DumpSketchJson(s);
  CHECK(ParseSketchJson(text) == s);

  const auto j = nlohmann::json::parse(
      R"({"objects":[{"kind":"line","start":{"x":0,"y":0},"end":{"x":1,"y":0}},
                     {"kind":"fix","entities":[0],"external":true}]})");
  CHECK_THROWS_AS(SketchFromJson(j), JsonFormatError);
  std::vector<std::string> dropped;
  const Sketch kept = SketchFromJson(j, &dropped);
  CHECK(kept.objects.size() == 1);
  CHECK(dropped.size() == 1);
  CHECK_THROWS_AS(ParseSketchJson(R"([{"kind":"banana"}])"), JsonFormatError);
}

}  // namespace sketchgen
