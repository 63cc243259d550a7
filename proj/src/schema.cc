/*!
 * \file sketchgen/schema.cc
 */
#include "sketchgen/schema.h"

#include <set>
#include <sstream>

#include "sketchgen/value.h"

namespace sketchgen {

const char* FieldKindName(FieldKind kind) {
  switch (kind) {
    case FieldKind::kBool:
      return "bool";
    case FieldKind::kEnum:
      return "enum";
    case FieldKind::kReal:
      return "double";
    case FieldKind::kPointer:
      return "pointer";
    case FieldKind::kMessage:
      return "message";
    case FieldKind::kOneof:
      return "oneof";
    case FieldKind::kRepeated:
      return "repeated";
  }
  return "?";
}

int MessageSpec::FieldIndex(const std::string& field_name) const {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == field_name) return static_cast<int>(i);
  }
  return -1;
}

const FieldSpec* MessageSpec::Oneof() const {
  for (const auto& f : fields) {
    if (f.kind == FieldKind::kOneof) return &f;
  }
  return nullptr;
}

SchemaRegistry::SchemaRegistry(std::map<std::string, MessageSpec> messages, std::string root)
    : messages_(std::move(messages)), root_(std::move(root)) {
  Validate();
}

const MessageSpec& SchemaRegistry::Message(const std::string& name) const {
  auto it = messages_.find(name);
  if (it == messages_.end()) throw SchemaError("unknown message '" + name + "'");
  return it->second;
}

namespace {

void CheckField(const SchemaRegistry& reg, const MessageSpec& msg, const FieldSpec& f,
                std::set<int>* numbers) {
  const std::string where = msg.name + "." + f.name;
  if (f.name.empty()) throw SchemaError("unnamed field in " + msg.name);
  if (f.kind != FieldKind::kOneof) {
    if (f.number < 1) throw SchemaError(where + ": field number must be >= 1");
    if (!numbers->insert(f.number).second) {
      throw SchemaError(where + ": duplicate field number " + std::to_string(f.number));
    }
  }
  switch (f.kind) {
    case FieldKind::kEnum:
      if (f.cardinality < 1 || static_cast<int>(f.enum_values.size()) != f.cardinality) {
        throw SchemaError(where + ": enum cardinality mismatch");
      }
      break;
    case FieldKind::kPointer:
      if (!msg.allows_pointers) throw SchemaError(where + ": pointer outside a constraint");
      break;
    case FieldKind::kMessage:
      reg.Message(f.message);
      break;
    case FieldKind::kOneof:
      if (f.branches.size() < 2) throw SchemaError(where + ": oneof needs >= 2 branches");
      for (const auto& b : f.branches) {
        if (b.kind == FieldKind::kOneof || b.kind == FieldKind::kRepeated) {
          throw SchemaError(where + ": oneof branch must be scalar or message");
        }
        CheckField(reg, msg, b, numbers);
      }
      break;
    case FieldKind::kRepeated: {
      if (f.at_least < 0) throw SchemaError(where + ": at_least must be >= 0");
      if (!f.element) throw SchemaError(where + ": repeated field without element");
      if (f.element->kind == FieldKind::kRepeated || f.element->kind == FieldKind::kOneof) {
        throw SchemaError(where + ": unsupported repeated element kind");
      }
      std::set<int> scratch;
      FieldSpec elem = *f.element;
      elem.number = f.number;
      CheckField(reg, msg, elem, &scratch);
      break;
    }
    default:
      break;
  }
}

}  // namespace

void SchemaRegistry::Validate() const {
  if (messages_.find(root_) == messages_.end()) throw SchemaError("root message missing");
  for (const auto& [name, msg] : messages_) {
    if (name != msg.name) throw SchemaError("message key mismatch for " + name);
    std::set<int> numbers;
    int oneofs = 0;
    for (const auto& f : msg.fields) {
      CheckField(*this, msg, f, &numbers);
      if (f.kind == FieldKind::kOneof) ++oneofs;
    }
    if (msg.handler) {
      if (!IsKnownHandler(*msg.handler)) {
        throw SchemaError(name + ": unresolved handler '" + *msg.handler + "'");
      }
      if (oneofs != 1) throw SchemaError(name + ": handler requires exactly one oneof");
    }
  }
}

// ---------------------------------------------------------------------------
// Built-in sketch schema.

namespace {

FieldSpec Bool(std::string name, int number) {
  FieldSpec f;
  f.name = std::move(name);
  f.number = number;
  f.kind = FieldKind::kBool;
  return f;
}

FieldSpec Real(std::string name, int number) {
  FieldSpec f = Bool(std::move(name), number);
  f.kind = FieldKind::kReal;
  return f;
}

FieldSpec Ptr(std::string name, int number) {
  FieldSpec f = Bool(std::move(name), number);
  f.kind = FieldKind::kPointer;
  return f;
}

FieldSpec Enum(std::string name, int number, std::vector<std::string> values) {
  FieldSpec f = Bool(std::move(name), number);
  f.kind = FieldKind::kEnum;
  f.cardinality = static_cast<int>(values.size());
  f.enum_values = std::move(values);
  return f;
}

FieldSpec Msg(std::string name, int number, std::string message) {
  FieldSpec f = Bool(std::move(name), number);
  f.kind = FieldKind::kMessage;
  f.message = std::move(message);
  return f;
}

FieldSpec Repeated(FieldSpec element, int at_least) {
  FieldSpec f;
  f.name = element.name;
  f.number = element.number;
  f.kind = FieldKind::kRepeated;
  f.at_least = at_least;
  f.element = std::make_shared<const FieldSpec>(std::move(element));
  return f;
}

FieldSpec OneofOf(std::string name, std::vector<FieldSpec> branches) {
  FieldSpec f;
  f.name = std::move(name);
  f.kind = FieldKind::kOneof;
  f.branches = std::move(branches);
  return f;
}

}  // namespace

SchemaRegistry LoadBuiltinSketchSchema() {
  std::map<std::string, MessageSpec> m;
  auto add = [&m](MessageSpec spec) {
    const std::string key = spec.name;
    m.emplace(key, std::move(spec));
  };
  auto constraint = [&add](std::string name, std::vector<FieldSpec> fields,
                           std::optional<std::string> handler = std::nullopt) {
    MessageSpec spec{std::move(name), std::move(fields), std::move(handler), true};
    add(std::move(spec));
  };

  add({"Vector", {Real("x", 1), Real("y", 2)}, std::nullopt, false});
  add({"Empty", {}, std::nullopt, false});

  // Entities.
  add({"PointEntity", {Bool("is_construction", 1), Msg("point", 2, "Vector")}, std::nullopt, false});
  add({"LineEntity",
       {Bool("is_construction", 1), Msg("start", 2, "Vector"), Msg("end", 3, "Vector")},
       std::nullopt,
       false});
  add({"CircleArcEntity.CircleParams", {Real("radius", 1)}, std::nullopt, false});
  add({"CircleArcEntity.ArcParams",
       {Msg("start", 1, "Vector"), Msg("end", 2, "Vector"), Bool("is_clockwise", 3)},
       std::nullopt,
       false});
  add({"CircleArcEntity",
       {Bool("is_construction", 1), Msg("center", 2, "Vector"),
        OneofOf("additional_params", {Msg("circle_params", 3, "CircleArcEntity.CircleParams"),
                                      Msg("arc_params", 4, "CircleArcEntity.ArcParams")})},
       std::nullopt,
       false});
  add({"InterpolatedSplineEntity.TrimmedParams",
       {Real("start_phi", 1), Real("end_phi", 2)},
       std::nullopt,
       false});
  add({"InterpolatedSplineEntity",
       {Bool("is_construction", 1), Bool("is_periodic", 2),
        Repeated(Msg("interp_points", 3, "Vector"), 2), Msg("start_derivative", 4, "Vector"),
        Msg("end_derivative", 5, "Vector"),
        OneofOf("additional_params",
                {Msg("untrimmed_params", 6, "Empty"),
                 Msg("trimmed_params", 7, "InterpolatedSplineEntity.TrimmedParams")})},
       std::nullopt,
       false});

  // Constraints.
  constraint("FixConstraint", {Repeated(Ptr("entities", 1), 1)});
  constraint("CoincidentConstraint", {Repeated(Ptr("entities", 1), 2)});
  constraint("ConcentricConstraint", {Repeated(Ptr("entities", 1), 2)});
  constraint("EqualConstraint", {Repeated(Ptr("entities", 1), 2)});
  constraint("ParallelConstraint", {Repeated(Ptr("entities", 1), 2)});
  constraint("TangentConstraint", {Ptr("first", 1), Ptr("second", 2)});
  constraint("PerpendicularConstraint", {Ptr("first", 1), Ptr("second", 2)});
  constraint("MirrorConstraint.Pair", {Ptr("first", 1), Ptr("second", 2)});
  constraint("MirrorConstraint",
             {Ptr("mirror", 1), Repeated(Msg("mirrored_pairs", 2, "MirrorConstraint.Pair"), 1)});
  constraint("DistanceConstraint.HalfSpaceParams",
             {Enum("half_space_first", 1, {"NOT_AVAILABLE", "LEFT", "RIGHT"}),
              Enum("half_space_second", 2, {"NOT_AVAILABLE", "LEFT", "RIGHT"})});
  constraint("DistanceConstraint",
             {Ptr("first", 1), Ptr("second", 2),
              Enum("direction", 3, {"HORIZONTAL", "VERTICAL", "MINIMUM"}), Real("length", 4),
              OneofOf("additional_params",
                      {Enum("alignment", 5, {"ALIGNED", "ANTI_ALIGNED"}),
                       Msg("half_space_params", 6, "DistanceConstraint.HalfSpaceParams")})},
             "select_distance_params");
  constraint("LengthConstraint", {Ptr("entity", 1), Real("length", 2)});
  constraint("DiameterConstraint", {Ptr("entity", 1), Real("length", 2)});
  constraint("RadiusConstraint", {Ptr("entity", 1), Real("length", 2)});
  constraint("AngleConstraint", {Ptr("first", 1), Ptr("second", 2), Real("angle", 3)});
  constraint("HorizontalConstraint", {Repeated(Ptr("entities", 1), 1)});
  // Field number 2 with no field 1 is how the constraint is printed; kept verbatim.
  constraint("VerticalConstraint", {Repeated(Ptr("entities", 2), 1)});
  constraint("MidpointConstraint.Endpoints", {Ptr("first", 1), Ptr("second", 2)});
  constraint("MidpointConstraint",
             {Ptr("midpoint", 1),
              OneofOf("additional_params", {Msg("endpoints", 2, "MidpointConstraint.Endpoints"),
                                            Ptr("entity", 3)})});

  // Sketch container.
  add({"Sketch.Entity",
       {OneofOf("kind", {Msg("line", 1, "LineEntity"), Msg("point", 2, "PointEntity"),
                         Msg("circle_arc", 3, "CircleArcEntity"),
                         Msg("interpolated_spline", 4, "InterpolatedSplineEntity")})},
       std::nullopt,
       false});
  add({"Sketch.Constraint",
       {OneofOf("kind",
                {Msg("fix", 1, "FixConstraint"), Msg("coincident", 2, "CoincidentConstraint"),
                 Msg("concentric", 3, "ConcentricConstraint"), Msg("equal", 4, "EqualConstraint"),
                 Msg("parallel", 5, "ParallelConstraint"), Msg("tangent", 6, "TangentConstraint"),
                 Msg("perpendicular", 7, "PerpendicularConstraint"),
                 Msg("mirror", 8, "MirrorConstraint"), Msg("distance", 9, "DistanceConstraint"),
                 Msg("length", 10, "LengthConstraint"), Msg("diameter", 11, "DiameterConstraint"),
                 Msg("radius", 12, "RadiusConstraint"), Msg("angle", 13, "AngleConstraint"),
                 Msg("horizontal", 14, "HorizontalConstraint"),
                 Msg("vertical", 15, "VerticalConstraint"),
                 Msg("midpoint", 16, "MidpointConstraint")})},
       std::nullopt,
       false});
  add({"Sketch.Object",
       {OneofOf("kind",
                {Msg("entity", 1, "Sketch.Entity"), Msg("constraint", 2, "Sketch.Constraint")})},
       std::nullopt,
       false});
  add({"Sketch", {Repeated(Msg("objects", 1, "Sketch.Object"), 0)}, std::nullopt, false});

  return SchemaRegistry(std::move(m), "Sketch");
}

const SchemaRegistry& BuiltinSketchSchema() {
  static const SchemaRegistry registry = LoadBuiltinSketchSchema();
  return registry;
}

bool IsKnownHandler(const std::string& name) { return name == "select_distance_params"; }

std::optional<int> ResolveOneofBranch(const MessageSpec& message, const Value& partial) {
  if (!message.handler) return std::nullopt;
  if (*message.handler == "select_distance_params") {
    const int idx = message.FieldIndex("direction");
    if (idx < 0 || partial.type != Value::Type::kMessage ||
        static_cast<size_t>(idx) >= partial.items.size() ||
        partial.items[idx].type != Value::Type::kInt) {
      throw SchemaOrderError(message.name + ": 'direction' must be set before additional_params");
    }
    const int64_t direction = partial.items[idx].integer;
    // HORIZONTAL, VERTICAL -> alignment; MINIMUM -> half_space_params.
    return (direction == 0 || direction == 1) ? 0 : 1;
  }
  throw SchemaError("unknown handler '" + *message.handler + "'");
}

namespace {

std::string DescribeType(const FieldSpec& f) {
  switch (f.kind) {
    case FieldKind::kEnum: {
      std::string out = "enum(";
      for (size_t i = 0; i < f.enum_values.size(); ++i) {
        if (i) out += ",";
        out += f.enum_values[i];
      }
      return out + ")";
    }
    case FieldKind::kMessage:
      return f.message;
    case FieldKind::kRepeated:
      return "repeated " + DescribeType(*f.element);
    default:
      return FieldKindName(f.kind);
  }
}

void DumpField(std::ostringstream& os, const FieldSpec& f, int indent) {
  os << std::string(indent, ' ');
  if (f.kind == FieldKind::kOneof) {
    os << "oneof " << f.name << "\n";
    for (const auto& b : f.branches) DumpField(os, b, indent + 2);
    return;
  }
  os << DescribeType(f) << " " << f.name << " = " << f.number;
  if (f.kind == FieldKind::kRepeated) os << " [at_least=" << f.at_least << "]";
  os << "\n";
}

}  // namespace

std::string DumpSchema(const SchemaRegistry& registry) {
  std::ostringstream os;
  os << "root " << registry.root_name() << "\n";
  for (const auto& [name, msg] : registry.messages()) {
    os << "message " << name;
    if (msg.handler) os << " [handler=" << *msg.handler << "]";
    os << "\n";
    for (const auto& f : msg.fields) DumpField(os, f, 2);
  }
  return os.str();
}

}  // namespace sketchgen
