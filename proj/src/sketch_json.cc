/*!
 * \file sketchgen/sketch_json.cc
 */
#include "sketchgen/sketch_json.h"

#include <array>

namespace sketchgen {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kDirectionNames = {"HORIZONTAL", "VERTICAL", "MINIMUM"};
constexpr std::array<const char*, 2> kAlignmentNames = {"ALIGNED", "ANTI_ALIGNED"};
constexpr std::array<const char*, 3> kHalfSpaceNames = {"NOT_AVAILABLE", "LEFT", "RIGHT"};

[[noreturn]] void Fail(const std::string& msg) { throw JsonFormatError(msg); }

const json& Require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) Fail(std::string("missing field '") + key + "'");
  return *it;
}

double ReadReal(const json& j, const char* key) {
  const json& v = Require(j, key);
  if (!v.is_number()) Fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

bool ReadFlag(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return false;
  if (!it->is_boolean()) Fail(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

Vec2 ReadVec(const json& j, const char* key) {
  const json& v = Require(j, key);
  if (!v.is_object()) Fail(std::string("field '") + key + "' must be an object");
  return {ReadReal(v, "x"), ReadReal(v, "y")};
}

Vec2 ReadVecValue(const json& v) {
  if (!v.is_object()) Fail("vector must be an object");
  return {ReadReal(v, "x"), ReadReal(v, "y")};
}

Pointer ReadPtr(const json& j, const char* key) {
  const json& v = Require(j, key);
  if (!v.is_number_integer() || v.get<int64_t>() < 0 || v.get<int64_t>() > UINT32_MAX) {
    Fail(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<Pointer>();
}

std::vector<Pointer> ReadPtrList(const json& j, const char* key) {
  const json& v = Require(j, key);
  if (!v.is_array()) Fail(std::string("field '") + key + "' must be an array");
  std::vector<Pointer> out;
  for (const auto& p : v) {
    if (!p.is_number_integer() || p.get<int64_t>() < 0) Fail("pointer must be >= 0");
    out.push_back(p.get<Pointer>());
  }
  return out;
}

template <typename E, size_t N>
E ReadEnum(const json& j, const char* key, const std::array<const char*, N>& names) {
  const json& v = Require(j, key);
  if (v.is_string()) {
    for (size_t i = 0; i < N; ++i) {
      if (v.get<std::string>() == names[i]) return static_cast<E>(i);
    }
  } else if (v.is_number_integer()) {
    const auto i = v.get<int64_t>();
    if (i >= 0 && i < static_cast<int64_t>(N)) return static_cast<E>(i);
  }
  Fail(std::string("field '") + key + "' has an invalid enum value");
}

json VecJson(const Vec2& v) { return {{"x", v.x}, {"y", v.y}}; }

Entity EntityFromJson(const std::string& kind, const json& j) {
  if (kind == "line") {
    return LineEntity{ReadFlag(j, "is_construction"), ReadVec(j, "start"), ReadVec(j, "end")};
  }
  if (kind == "point") {
    return PointEntity{ReadFlag(j, "is_construction"), ReadVec(j, "point")};
  }
  if (kind == "circle_arc") {
    CircleArcEntity c;
    c.is_construction = ReadFlag(j, "is_construction");
    c.center = ReadVec(j, "center");
    const bool circle = j.contains("circle_params");
    const bool arc = j.contains("arc_params");
    if (circle == arc) Fail("circle_arc needs exactly one of circle_params / arc_params");
    if (circle) {
      c.params = CircleParams{ReadReal(j["circle_params"], "radius")};
    } else {
      const json& a = j["arc_params"];
      c.params = ArcParams{ReadVec(a, "start"), ReadVec(a, "end"), ReadFlag(a, "is_clockwise")};
    }
    return c;
  }
  if (kind == "interpolated_spline") {
    InterpolatedSplineEntity s;
    s.is_construction = ReadFlag(j, "is_construction");
    s.is_periodic = ReadFlag(j, "is_periodic");
    const json& pts = Require(j, "interp_points");
    if (!pts.is_array()) Fail("interp_points must be an array");
    for (const auto& p : pts) s.interp_points.push_back(ReadVecValue(p));
    s.start_derivative = ReadVec(j, "start_derivative");
    s.end_derivative = ReadVec(j, "end_derivative");
    const bool trimmed = j.contains("trimmed_params");
    if (trimmed && j.contains("untrimmed_params")) Fail("spline has both trim branches");
    if (trimmed) {
      const json& t = j["trimmed_params"];
      s.params = TrimmedParams{ReadReal(t, "start_phi"), ReadReal(t, "end_phi")};
    } else {
      s.params = UntrimmedParams{};
    }
    return s;
  }
  Fail("unknown entity kind '" + kind + "'");
}

template <typename T>
T ListFromJson(const json& j) {
  T c;
  c.entities = ReadPtrList(j, "entities");
  return c;
}

template <typename T>
T PairFromJson(const json& j) {
  T c;
  c.first = ReadPtr(j, "first");
  c.second = ReadPtr(j, "second");
  return c;
}

template <typename T>
T MeasureFromJson(const json& j) {
  T c;
  c.entity = ReadPtr(j, "entity");
  c.length = ReadReal(j, "length");
  return c;
}

bool ConstraintFromJson(const std::string& kind, const json& j, Constraint* out) {
  if (kind == "fix") *out = ListFromJson<FixConstraint>(j);
  else if (kind == "coincident") *out = ListFromJson<CoincidentConstraint>(j);
  else if (kind == "concentric") *out = ListFromJson<ConcentricConstraint>(j);
  else if (kind == "equal") *out = ListFromJson<EqualConstraint>(j);
  else if (kind == "parallel") *out = ListFromJson<ParallelConstraint>(j);
  else if (kind == "horizontal") *out = ListFromJson<HorizontalConstraint>(j);
  else if (kind == "vertical") *out = ListFromJson<VerticalConstraint>(j);
  else if (kind == "tangent") *out = PairFromJson<TangentConstraint>(j);
  else if (kind == "perpendicular") *out = PairFromJson<PerpendicularConstraint>(j);
  else if (kind == "length") *out = MeasureFromJson<LengthConstraint>(j);
  else if (kind == "diameter") *out = MeasureFromJson<DiameterConstraint>(j);
  else if (kind == "radius") *out = MeasureFromJson<RadiusConstraint>(j);
  else if (kind == "mirror") {
    MirrorConstraint c;
    c.mirror = ReadPtr(j, "mirror");
    const json& pairs = Require(j, "mirrored_pairs");
    if (!pairs.is_array()) Fail("mirrored_pairs must be an array");
    for (const auto& p : pairs) c.mirrored_pairs.push_back({ReadPtr(p, "first"), ReadPtr(p, "second")});
    *out = c;
  } else if (kind == "distance") {
    DistanceConstraint c;
    c.first = ReadPtr(j, "first");
    c.second = ReadPtr(j, "second");
    c.direction = ReadEnum<Direction>(j, "direction", kDirectionNames);
    c.length = ReadReal(j, "length");
    if (j.contains("alignment")) {
      c.params = ReadEnum<Alignment>(j, "alignment", kAlignmentNames);
    } else if (j.contains("half_space_params")) {
      const json& h = j["half_space_params"];
      c.params = HalfSpaceParams{ReadEnum<HalfSpace>(h, "half_space_first", kHalfSpaceNames),
                                 ReadEnum<HalfSpace>(h, "half_space_second", kHalfSpaceNames)};
    } else {
      Fail("distance needs alignment or half_space_params");
    }
    *out = c;
  } else if (kind == "angle") {
    AngleConstraint c;
    c.first = ReadPtr(j, "first");
    c.second = ReadPtr(j, "second");
    c.angle = ReadReal(j, "angle");
    *out = c;
  } else if (kind == "midpoint") {
    MidpointConstraint c;
    c.midpoint = ReadPtr(j, "midpoint");
    if (j.contains("endpoints")) {
      const json& e = j["endpoints"];
      c.params = MidpointEndpoints{ReadPtr(e, "first"), ReadPtr(e, "second")};
    } else {
      c.params = MidpointEntityRef{ReadPtr(j, "entity")};
    }
    *out = c;
  } else {
    return false;
  }
  return true;
}

}  // namespace

Sketch SketchFromJson(const json& j, std::vector<std::string>* dropped) {
  const json* list = &j;
  if (j.is_object()) list = &Require(j, "objects");
  if (!list->is_array()) Fail("sketch must be an array of objects or {\"objects\": [...]}");
  Sketch s;
  size_t index = 0;
  for (const auto& o : *list) {
    if (!o.is_object()) Fail("object " + std::to_string(index) + " is not a JSON object");
    const json& kind_j = Require(o, "kind");
    if (!kind_j.is_string()) Fail("'kind' must be a string");
    const std::string kind = kind_j.get<std::string>();
    Constraint c;
    try {
      if (ConstraintFromJson(kind, o, &c)) {
        if (o.value("external", false)) {
          if (!dropped) Fail("constraint refers to an external entity");
          dropped->push_back("object " + std::to_string(index) + ": " + kind +
                             " constraint refers to an external entity");
        } else {
          s.objects.emplace_back(std::move(c));
        }
      } else {
        s.objects.emplace_back(EntityFromJson(kind, o));
      }
    } catch (const JsonFormatError& e) {
      throw JsonFormatError("object " + std::to_string(index) + " (" + kind + "): " + e.what());
    } catch (const json::exception& e) {
      throw JsonFormatError("object " + std::to_string(index) + " (" + kind + "): " + e.what());
    }
    ++index;
  }
  return s;
}

Sketch ParseSketchJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw JsonFormatError(std::string("invalid JSON: ") + e.what());
  }
  return SketchFromJson(j);
}

json ObjectToJson(const Object& o) {
  if (IsEntity(o)) {
    return std::visit(
        [](const auto& x) -> json {
          using T = std::decay_t<decltype(x)>;
          json j;
          if constexpr (std::is_same_v<T, LineEntity>) {
            j = {{"kind", "line"}, {"is_construction", x.is_construction},
                 {"start", VecJson(x.start)}, {"end", VecJson(x.end)}};
          } else if constexpr (std::is_same_v<T, PointEntity>) {
            j = {{"kind", "point"}, {"is_construction", x.is_construction},
                 {"point", VecJson(x.point)}};
          } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
            j = {{"kind", "circle_arc"}, {"is_construction", x.is_construction},
                 {"center", VecJson(x.center)}};
            if (const auto* c = std::get_if<CircleParams>(&x.params)) {
              j["circle_params"] = {{"radius", c->radius}};
            } else {
              const auto& a = std::get<ArcParams>(x.params);
              j["arc_params"] = {{"start", VecJson(a.start)},
                                 {"end", VecJson(a.end)},
                                 {"is_clockwise", a.is_clockwise}};
            }
          } else {
            json pts = json::array();
            for (const auto& p : x.interp_points) pts.push_back(VecJson(p));
            j = {{"kind", "interpolated_spline"}, {"is_construction", x.is_construction},
                 {"is_periodic", x.is_periodic}, {"interp_points", pts},
                 {"start_derivative", VecJson(x.start_derivative)},
                 {"end_derivative", VecJson(x.end_derivative)}};
            if (const auto* t = std::get_if<TrimmedParams>(&x.params)) {
              j["trimmed_params"] = {{"start_phi", t->start_phi}, {"end_phi", t->end_phi}};
            } else {
              j["untrimmed_params"] = json::object();
            }
          }
          return j;
        },
        AsEntity(o));
  }
  const Constraint& c = AsConstraint(o);
  json j = {{"kind", ConstraintKindName(KindOf(c))}};
  std::visit(
      [&j](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (requires { x.entities; }) {
          j["entities"] = x.entities;
        } else if constexpr (std::is_same_v<T, MirrorConstraint>) {
          j["mirror"] = x.mirror;
          json pairs = json::array();
          for (const auto& p : x.mirrored_pairs) {
            pairs.push_back({{"first", p.first}, {"second", p.second}});
          }
          j["mirrored_pairs"] = pairs;
        } else if constexpr (std::is_same_v<T, DistanceConstraint>) {
          j["first"] = x.first;
          j["second"] = x.second;
          j["direction"] = kDirectionNames[static_cast<int>(x.direction)];
          j["length"] = x.length;
          if (const auto* a = std::get_if<Alignment>(&x.params)) {
            j["alignment"] = kAlignmentNames[static_cast<int>(*a)];
          } else {
            const auto& h = std::get<HalfSpaceParams>(x.params);
            j["half_space_params"] = {
                {"half_space_first", kHalfSpaceNames[static_cast<int>(h.half_space_first)]},
                {"half_space_second", kHalfSpaceNames[static_cast<int>(h.half_space_second)]}};
          }
        } else if constexpr (std::is_same_v<T, AngleConstraint>) {
          j["first"] = x.first;
          j["second"] = x.second;
          j["angle"] = x.angle;
        } else if constexpr (std::is_same_v<T, MidpointConstraint>) {
          j["midpoint"] = x.midpoint;
          if (const auto* ep = std::get_if<MidpointEndpoints>(&x.params)) {
            j["endpoints"] = {{"first", ep->first}, {"second", ep->second}};
          } else {
            j["entity"] = std::get<MidpointEntityRef>(x.params).entity;
          }
        } else if constexpr (requires { x.length; }) {
          j["entity"] = x.entity;
          j["length"] = x.length;
        } else {
          j["first"] = x.first;
          j["second"] = x.second;
        }
      },
      c);
  return j;
}

json SketchToJson(const Sketch& s) {
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back(ObjectToJson(o));
  return {{"objects", objects}};
}

std::string DumpSketchJson(const Sketch& s, int indent) { return SketchToJson(s).dump(indent); }

}  // namespace sketchgen
