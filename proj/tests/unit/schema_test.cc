#include <doctest.h>

#include "sketchgen/schema.h"
#include "sketchgen/value.h"

namespace sketchgen {

TEST_CASE("builtin schema: oneof cardinalities") {
  const SchemaRegistry& reg = BuiltinSketchSchema();
  CHECK(reg.root_name() == "Sketch");
  CHECK(reg.Message("Sketch.Entity").Oneof()->branches.size() == 4);
  CHECK(reg.Message("Sketch.Constraint").Oneof()->branches.size() == 16);
  CHECK(reg.Message("Sketch.Object").Oneof()->branches.size() == 2);
  const auto& entity = reg.Message("Sketch.Entity").Oneof()->branches;
  CHECK(entity[0].name == "line");
  CHECK(entity[1].name == "point");
}

TEST_CASE("builtin schema: at_least options") {
  const SchemaRegistry& reg = BuiltinSketchSchema();
  const auto& mirror = reg.Message("MirrorConstraint");
  const auto& pairs = mirror.fields[mirror.FieldIndex("mirrored_pairs")];
  CHECK(pairs.kind == FieldKind::kRepeated);
  CHECK(pairs.at_least == 1);
  CHECK(reg.Message("CoincidentConstraint").fields[0].at_least == 2);
  CHECK(reg.Message("FixConstraint").fields[0].at_least == 1);
  CHECK(reg.Message("InterpolatedSplineEntity").fields[2].at_least == 2);
  CHECK(reg.Message("VerticalConstraint").fields[0].number == 2);
}

TEST_CASE("builtin schema validates and is deterministic") {
  CHECK_NOTHROW(BuiltinSketchSchema().Validate());
  CHECK(DumpSchema(LoadBuiltinSketchSchema()) == DumpSchema(BuiltinSketchSchema()));
  const std::string dump = DumpSchema(BuiltinSketchSchema());
  CHECK(dump.find("message DistanceConstraint [handler=select_distance_params]") !=
        std::string::npos);
  CHECK(dump.find("repeated MirrorConstraint.Pair mirrored_pairs = 2 [at_least=1]") !=
        std::string::npos);
}

TEST_CASE("resolve_oneof_branch") {
  const SchemaRegistry& reg = BuiltinSketchSchema();
  const auto& distance = reg.Message("DistanceConstraint");
  Value partial = Value::Message(distance.fields.size());
  partial.items[0] = Value::Int(0);
  partial.items[1] = Value::Int(1);
  CHECK_THROWS_AS(ResolveOneofBranch(distance, partial), SchemaOrderError);
  partial.items[2] = Value::Int(0);
  CHECK(ResolveOneofBranch(distance, partial) == 0);
  partial.items[2] = Value::Int(1);
  CHECK(ResolveOneofBranch(distance, partial) == 0);
  partial.items[2] = Value::Int(2);
  CHECK(ResolveOneofBranch(distance, partial) == 1);

  const auto& arc = reg.Message("CircleArcEntity");
  CHECK_FALSE(ResolveOneofBranch(arc, Value::Message(arc.fields.size())).has_value());
}

TEST_CASE("schema validation rejects bad registries") {
  auto reg_with = [](MessageSpec spec) {
    std::map<std::string, MessageSpec> m;
    m.emplace(spec.name, spec);
    return SchemaRegistry(std::move(m), spec.name);
  };
  FieldSpec a;
  a.name = "a";
  a.number = 1;
  FieldSpec b = a;
  b.name = "b";
  CHECK_THROWS_AS(reg_with({"M", {a, b}, std::nullopt, false}), SchemaError);
  FieldSpec p = a;
  p.kind = FieldKind::kPointer;
  CHECK_THROWS_AS(reg_with({"M", {p}, std::nullopt, false}), SchemaError);
  CHECK_NOTHROW(reg_with({"M", {p}, std::nullopt, true}));
  FieldSpec zero = a;
  zero.number = 0;
  CHECK_THROWS_AS(reg_with({"M", {zero}, std::nullopt, false}), SchemaError);
  CHECK_THROWS_AS(reg_with({"M", {a}, std::string("nope"), false}), SchemaError);
  CHECK_THROWS_AS(SchemaRegistry({}, "Missing"), SchemaError);
}

}  // namespace sketchgen
