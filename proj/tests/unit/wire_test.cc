#include <doctest.h>

#include "fixtures.h"
#include "sketchgen/wire.h"

namespace sketchgen {

namespace {

Bytes Hex(std::initializer_list<int> v) { return Bytes(v.begin(), v.end()); }

int ParseErrorOffset(const Bytes& b) {
  try {
    Parse(b);
  } catch (const WireParseError& e) {
    return static_cast<int>(e.offset());
  }
  return -1;
}

}  // namespace

TEST_CASE("varint encoding") {
  Bytes out;
  AppendVarint(0, &out);
  AppendVarint(1, &out);
  AppendVarint(300, &out);
  AppendVarint(UINT32_MAX, &out);
  CHECK(out == Hex({0x00, 0x01, 0xAC, 0x02, 0xFF, 0xFF, 0xFF, 0xFF, 0x0F}));
}

TEST_CASE("point entity bytes") {
  const SchemaRegistry& reg = BuiltinSketchSchema();
  Value point = Value::Message(2);
  point.items[0] = Value::Bool(true);
  point.items[1] = Value::Message(2);
  point.items[1].items[0] = Value::Real(0.0);
  point.items[1].items[1] = Value::Real(0.0);
  // 08 01 | 12 12 | 09 <8 zero bytes> | 11 <8 zero bytes>
  Bytes expected = {0x08, 0x01, 0x12, 0x12, 0x09};
  expected.insert(expected.end(), 8, 0);
  expected.push_back(0x11);
  expected.insert(expected.end(), 8, 0);
  CHECK(SerializeValue(reg, reg.Message("PointEntity"), point) == expected);
  // Unset fields serialize as explicit defaults.
  Value defaults = Value::Message(2);
  expected[1] = 0x00;
  CHECK(SerializeValue(reg, reg.Message("PointEntity"), defaults) == expected);
}

TEST_CASE("empty sketch serializes to zero bytes") {
  CHECK(Serialize(Sketch{}).empty());
  CHECK(Parse(Bytes{}) == Sketch{});
}

TEST_CASE("round trips") {
  for (const Sketch& s : {testing::LinePointSketch(), testing::ConstrainedSquare(-1, 1)}) {
    const Bytes b = Serialize(s);
    CHECK(Parse(b) == s);
    CHECK(Serialize(Parse(b)) == b);
  }
  Sketch sp;
  sp.objects.push_back(Entity{InterpolatedSplineEntity{
      false, false, {{0, 0}, {1, 1}}, {0.5, -0.5}, {1, 2}, UntrimmedParams{}}});
  CHECK(Parse(Serialize(sp)) == sp);
}

TEST_CASE("invalid sketches are refused") {
  Sketch s;
  s.objects.push_back(Constraint{CoincidentConstraint{{0}}});
  CHECK_THROWS_AS(Serialize(s), InvalidSketchError);
}

TEST_CASE("parse errors carry offsets") {
  CHECK(ParseErrorOffset(Hex({0xFF})) == 0);
  // Field 99, varint: tag = 99 << 3 = 792 = 0x98 0x06.
  CHECK(ParseErrorOffset(Hex({0x98, 0x06, 0x00})) == 0);
  // Varint longer than 5 bytes.
  CHECK(ParseErrorOffset(Hex({0x0A, 0x06, 0x80, 0x80, 0x80, 0x80, 0x80, 0x01})) == 2);
  // objects field with wrong wire type (varint).
  CHECK(ParseErrorOffset(Hex({0x08, 0x01})) == 0);
  // Length prefix beyond the buffer.
  CHECK(ParseErrorOffset(Hex({0x0A, 0x05, 0x0A})) == 2);

  // Object with both entity and constraint branches set.
  Bytes entity = Serialize(testing::LinePointSketch());
  // entity bytes: 0A len <Object>; append a constraint branch (field 2) into the first object.
  REQUIRE(entity[0] == 0x0A);
  const size_t len = entity[1];
  Bytes object(entity.begin() + 2, entity.begin() + 2 + len);
  object.push_back(0x12);
  object.push_back(0x00);
  Bytes twice = {0x0A, static_cast<uint8_t>(object.size())};
  twice.insert(twice.end(), object.begin(), object.end());
  CHECK_THROWS_WITH_AS(Parse(twice), doctest::Contains("oneof set twice"), WireParseError);

  // Object message without any branch.
  CHECK_THROWS_WITH_AS(Parse(Hex({0x0A, 0x00})), doctest::Contains("oneof unset"), WireParseError);
}

TEST_CASE("duplicate scalar and bad enum values are rejected") {
  const SchemaRegistry& reg = BuiltinSketchSchema();
  CHECK_THROWS_AS(ParseValue(reg, reg.Message("Vector"), Hex({0x09, 0, 0, 0, 0, 0, 0, 0, 0, 0x09,
                                                                0, 0, 0, 0, 0, 0, 0, 0})),
                  WireParseError);
  CHECK_THROWS_AS(ParseValue(reg, reg.Message("LineEntity"), Hex({0x08, 0x02})), WireParseError);
  CHECK_THROWS_AS(
      ParseValue(reg, reg.Message("DistanceConstraint.HalfSpaceParams"), Hex({0x08, 0x03})),
      WireParseError);
}

TEST_CASE("byte tokens") {
  CHECK(ByteTokens(Bytes{}) == std::vector<int>{kByteEos});
  CHECK(ByteTokens(Hex({0x08, 0x01})) == std::vector<int>{8, 1, 256});
}

}  // namespace sketchgen
