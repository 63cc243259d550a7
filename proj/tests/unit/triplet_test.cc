#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "sketchgen/synth.h"
#include "sketchgen/tokens.h"
#include "sketchgen/triplet.h"
#include "sketchgen/wire.h"

namespace sketchgen {

namespace {

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/*! Random legal continuation until terminal or the budget runs out. */
std::vector<Triplet> RandomLegalWalk(std::mt19937_64& rng, int budget) {
  Interpreter it;
  std::vector<Triplet> out;
  for (int i = 0; i < budget && !it.terminal(); ++i) {
    const Slot& s = it.slot();
    const int support = SupportSize(s);
    REQUIRE(support > 0);
    int k = std::uniform_int_distribution<int>(0, support - 1)(rng);
    // Bias toward ending long lists so walks terminate.
    if (s.end_allowed && std::bernoulli_distribution(0.3)(rng)) k = s.legal_count;
    Triplet t;
    if (k == s.legal_count) {
      t = Triplet::End();
    } else if (s.continuous) {
      t = Triplet::Continuous(Dequantize(k, TokenGroups()[s.group]));
    } else {
      t = Triplet::Discrete(k);
    }
    it.Step(t);
    out.push_back(t);
  }
  // Close whatever is open.
  while (!it.terminal()) {
    const Slot& s = it.slot();
    Triplet t = s.end_allowed ? Triplet::End()
                : s.continuous ? Triplet::Continuous(0.0)
                               : Triplet::Discrete(0);
    it.Step(t);
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("token groups cover every field id exactly once") {
  for (const auto& id : FieldIds()) {
    if (EndsWith(id, ".ref")) continue;
    INFO(id);
    CHECK(GroupOfField(id) >= 0);
  }
  CHECK(TokenGroups()[GroupOfField("objects.kind")].cardinality == 2);
  CHECK(TokenGroups()[GroupOfField("objects.entity.kind")].cardinality == 4);
  CHECK(TokenGroups()[GroupOfField("objects.constraint.kind")].cardinality == 16);
  CHECK(TokenGroups()[GroupOfField("objects.constraint.distance.direction")].cardinality == 3);
  CHECK(TokenGroups()[GroupOfField("objects.constraint.mirror.mirrored_pairs.first")].name ==
        "pointer");
  CHECK(TokenGroups()[GroupOfField("objects.entity.interpolated_spline.interp_points.y")].name ==
        "coordinate");
  CHECK(TokenGroups()[GroupOfField(
                          "objects.constraint.distance.half_space_params.half_space_first")]
            .name == "half_space");
  CHECK(TokenGroups()[GroupOfField("objects.constraint.length.length")].hi ==
        doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("quantize / dequantize") {
  const TokenGroup& coords = TokenGroups()[GroupIndex("coordinate")];
  CHECK(Quantize(-1.0, coords) == 0);
  CHECK(Quantize(1.0, coords) == 255);
  CHECK(Quantize(0.0, coords) == 128);
  CHECK(Quantize(-5.0, coords) == 0);
  CHECK(Dequantize(0, coords) == -1.0);
  CHECK(Dequantize(255, coords) == 1.0);
  CHECK_THROWS_AS(Dequantize(256, coords), std::out_of_range);
  std::mt19937_64 rng(3);
  for (const auto& g : TokenGroups()) {
    if (!g.continuous) continue;
    std::uniform_real_distribution<double> u(g.lo - 1.0, g.hi + 1.0);
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng);
      const double clamped = std::clamp(x, g.lo, g.hi);
      CHECK(std::abs(Dequantize(Quantize(x, g), g) - clamped) <= HalfBinWidth(g) * (1 + 1e-12));
    }
    for (int k = 0; k < kNumBins; ++k) CHECK(Quantize(Dequantize(k, g), g) == k);
  }
}

TEST_CASE("line + point encodes to the 13 documented triplets") {
  const auto tokens = Encode(testing::LinePointSketch());
  const auto predicted = PredictedTriplets(tokens);
  const std::vector<Triplet> expected = {
      Triplet::Discrete(0),       Triplet::Discrete(0),      Triplet::Discrete(1),
      Triplet::Continuous(0.0),   Triplet::Continuous(0.1),  Triplet::Continuous(-0.5),
      Triplet::Continuous(0.2),   Triplet::Discrete(0),      Triplet::Discrete(1),
      Triplet::Discrete(0),       Triplet::Continuous(0.0),  Triplet::Continuous(0.1),
      Triplet::End()};
  CHECK(predicted == expected);
  const std::vector<std::string> ids = {
      "objects.kind", "objects.entity.kind", "objects.entity.line.is_construction",
      "objects.entity.line.start.x", "objects.entity.line.start.y", "objects.entity.line.end.x",
      "objects.entity.line.end.y", "objects.kind", "objects.entity.kind",
      "objects.entity.point.is_construction", "objects.entity.point.point.x",
      "objects.entity.point.point.y", "objects.kind"};
  std::vector<std::string> got;
  for (const auto& t : tokens) {
    if (!t.ctx.is_referrable) got.push_back(t.ctx.field_id);
  }
  CHECK(got == ids);
  // 5 injected referrables: 3 after the line, 2 after the point.
  CHECK(tokens.size() == 18);
  CHECK(tokens[7].ctx.is_referrable);
  CHECK(tokens[7].ctx.field_id == "objects.entity.line.ref");
  CHECK(tokens[9].ctx.referrable_part == 2);
  CHECK(tokens[10].ctx == TokenContext{"objects.kind", 1, 0, false, -1});
  CHECK(tokens.back().ctx == TokenContext{"objects.kind", 2, 0, false, -1});
}

TEST_CASE("empty sketch") {
  const auto tokens = Encode(Sketch{});
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].t == Triplet::End());
  CHECK(Decode(std::vector<Triplet>{Triplet::End()}) == Sketch{});
}

TEST_CASE("line + coincident tokens") {
  Sketch s;
  s.objects.push_back(testing::Line(0, 0, 1, 0));
  s.objects.push_back(Constraint{CoincidentConstraint{{1, 2}}});
  const auto tokens = Encode(s);
  // 7 line tokens, 3 referrables, then constraint tokens.
  REQUIRE(tokens.size() == 7 + 3 + 5 + 1);
  for (int i = 7; i < 10; ++i) CHECK(tokens[i].ctx.is_referrable);
  CHECK(tokens[10].t == Triplet::Discrete(1));  // objects.kind = constraint
  CHECK(tokens[11].t == Triplet::Discrete(1));  // constraint.kind = coincident
  CHECK(tokens[12].t == Triplet::Discrete(1));
  CHECK(tokens[12].ctx.field_id == "objects.constraint.coincident.entities");
  CHECK(tokens[13].t == Triplet::Discrete(2));
  CHECK(tokens[14].t == Triplet::End());
  CHECK(tokens[14].ctx.field_id == "objects.constraint.coincident.entities");
  CHECK(tokens[14].ctx.m == 4);
  CHECK(tokens[15].t == Triplet::End());
}

TEST_CASE("decode the line rows") {
  const std::vector<Triplet> t = {Triplet::Discrete(0),      Triplet::Discrete(0),
                                  Triplet::Discrete(1),      Triplet::Continuous(0.0),
                                  Triplet::Continuous(0.1),  Triplet::Continuous(-0.5),
                                  Triplet::Continuous(0.2),  Triplet::End()};
  Sketch expected;
  expected.objects.push_back(testing::Line(0.0, 0.1, -0.5, 0.2, true));
  CHECK(Decode(t) == expected);
}

TEST_CASE("decode errors") {
  try {
    Decode(std::vector<Triplet>{Triplet::Discrete(5)});
    FAIL("expected error");
  } catch (const DecodeError& e) {
    CHECK(e.token_index() == 0);
    CHECK(std::string(e.what()).find("objects.kind") != std::string::npos);
  }
  // Premature end inside a line.
  CHECK_THROWS_AS(Decode(std::vector<Triplet>{Triplet::Discrete(0), Triplet::Discrete(0),
                                              Triplet::End()}),
                  DecodeError);
  // Truncated sequence.
  CHECK_THROWS_AS(Decode(std::vector<Triplet>{Triplet::Discrete(0)}), DecodeError);
  // Pointer beyond the table: line (3 parts) then coincident with pointer 3.
  std::vector<Triplet> t = PredictedTriplets(Encode([] {
    Sketch s;
    s.objects.push_back(testing::Line(0, 0, 1, 0));
    s.objects.push_back(Constraint{CoincidentConstraint{{1, 2}}});
    return s;
  }()));
  t[9] = Triplet::Discrete(3);
  CHECK_THROWS_AS(Decode(t), DecodeError);
  // Token after the end.
  CHECK_THROWS_AS(Decode(std::vector<Triplet>{Triplet::End(), Triplet::End()}), DecodeError);
}

TEST_CASE("legal actions") {
  Interpreter it;
  CHECK(it.slot().field_id == "objects.kind");
  CHECK(it.slot().group_cardinality == 2);
  CHECK(it.slot().end_allowed);
  // No referrables yet: only entities can start.
  CHECK(it.slot().legal_count == 1);

  it.Step(Triplet::Discrete(0));
  CHECK(it.slot().field_id == "objects.entity.kind");
  CHECK_FALSE(it.slot().end_allowed);
  CHECK(it.slot().legal_count == 4);

  Interpreter done;
  done.Step(Triplet::End());
  CHECK(done.terminal());

  // Line + point then a coincident: pointer cardinality 5, end forbidden after one pointer.
  Interpreter lp;
  for (const auto& t : PredictedTriplets(Encode(testing::LinePointSketch()))) {
    if (t.f) break;
    lp.Step(t);
  }
  CHECK(lp.slot().legal_count == 2);
  lp.Step(Triplet::Discrete(1));
  lp.Step(Triplet::Discrete(1));
  CHECK(lp.slot().field_id == "objects.constraint.coincident.entities");
  CHECK(lp.slot().legal_count == 5);
  CHECK_FALSE(lp.slot().end_allowed);
  lp.Step(Triplet::Discrete(4));
  CHECK_FALSE(lp.slot().end_allowed);
  CHECK_THROWS_AS(lp.Step(Triplet::End()), IllegalTokenError);
  lp.Step(Triplet::Discrete(0));
  CHECK(lp.slot().end_allowed);
}

TEST_CASE("distance handler consumes no token") {
  Interpreter it;
  for (const auto& t : PredictedTriplets(Encode(testing::LinePointSketch()))) {
    if (t.f) break;
    it.Step(t);
  }
  it.Step(Triplet::Discrete(1));  // constraint
  it.Step(Triplet::Discrete(8));  // distance
  it.Step(Triplet::Discrete(0));
  it.Step(Triplet::Discrete(3));
  CHECK(it.slot().field_id == "objects.constraint.distance.direction");
  it.Step(Triplet::Discrete(0));  // HORIZONTAL
  it.Step(Triplet::Continuous(0.5));
  CHECK(it.slot().field_id == "objects.constraint.distance.alignment");
  it.Step(Triplet::Discrete(1));
  CHECK(it.slot().field_id == "objects.kind");
  CHECK(it.at_object_boundary());
  CHECK(it.completed_objects() == 3);
}

TEST_CASE("step rejects illegal tokens without changing state") {
  Interpreter it;
  it.Step(Triplet::Discrete(0));
  const Slot before = it.slot();
  CHECK_THROWS_AS(it.Step(Triplet::Discrete(9)), IllegalTokenError);
  CHECK_THROWS_AS(it.Step(Triplet::Continuous(0.3)), IllegalTokenError);
  CHECK(it.slot().field_id == before.field_id);
  it.Step(Triplet::Discrete(1));
  CHECK(it.slot().field_id == "objects.entity.point.is_construction");
}

TEST_CASE("interpreter contexts match the encoder") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Sketch s = RandomSketch(rng);
    const auto tokens = Encode(s);
    const auto predicted = PredictedTriplets(tokens);
    const auto annotated = Annotate(predicted);
    REQUIRE(annotated.size() == tokens.size());
    for (size_t k = 0; k < tokens.size(); ++k) CHECK(annotated[k].token == tokens[k]);
  }
}

TEST_CASE("round trip on random sketches") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const Sketch s = RandomSketch(rng);
    REQUIRE(ValidateSketch(s).empty());
    CHECK(Decode(PredictedTriplets(Encode(s))) == s);
    CHECK(Parse(Serialize(s)) == s);
  }
}

TEST_CASE("validity by construction") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto walk = RandomLegalWalk(rng, 400);
    Sketch s;
    REQUIRE_NOTHROW(s = Decode(walk));
    CHECK(ValidateSketch(s).empty());
    CHECK(PredictedTriplets(Encode(s)) == walk);
  }
}

TEST_CASE("reorder") {
  Sketch s;
  s.objects.push_back(testing::Line(0, 0, 1, 0));
  s.objects.push_back(testing::Line(1, 0, 1, 1));
  s.objects.push_back(testing::Line(1, 1, 0, 0));
  s.objects.push_back(Constraint{CoincidentConstraint{{2, 4}}});
  const Sketch inter = Reorder(s, Ordering::kInterleaved);
  REQUIRE(inter.objects.size() == 4);
  CHECK_FALSE(IsEntity(inter.objects[2]));
  CHECK(inter.objects[3] == s.objects[2]);
  CHECK(Reorder(inter, Ordering::kInterleaved) == inter);
  CHECK(Reorder(inter, Ordering::kConcatenated) == s);

  Sketch c;
  c.objects.push_back(testing::Line(0, 0, 1, 0));
  c.objects.push_back(Constraint{FixConstraint{{0}}});
  c.objects.push_back(testing::Line(1, 0, 1, 1));
  const Sketch cat = Reorder(c, Ordering::kConcatenated);
  CHECK(!IsEntity(cat.objects[2]));
  CHECK(Reorder(cat, Ordering::kConcatenated) == cat);

  Sketch bad;
  bad.objects.push_back(Constraint{FixConstraint{{0}}});
  bad.objects.push_back(testing::Line(0, 0, 1, 0));
  CHECK_THROWS_AS(Reorder(bad, Ordering::kInterleaved), ReorderError);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Sketch r = RandomSketch(rng);
    for (Ordering m : {Ordering::kConcatenated, Ordering::kInterleaved}) {
      const Sketch once = Reorder(r, m);
      CHECK(Reorder(once, m) == once);
    }
  }
}

TEST_CASE("token text format round trip") {
  const auto tokens = Encode(testing::LinePointSketch());
  std::ostringstream os;
  WriteTokenText(os, tokens);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
  CHECK(text.rfind("0 0 1 objects.kind 2 0\n") != std::string::npos);
  std::istringstream is(text);
  CHECK(ReadTokenText(is) == PredictedTriplets(tokens));
}

}  // namespace sketchgen
