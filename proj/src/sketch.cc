/*!
 * \file sketchgen/sketch.cc
 */
#include "sketchgen/sketch.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sketchgen {

bool IsConstruction(const Entity& e) {
  return std::visit([](const auto& x) { return x.is_construction; }, e);
}

const char* EntityKindName(EntityKind kind) {
  static const char* kNames[] = {"line", "point", "circle_arc", "interpolated_spline"};
  return kNames[static_cast<int>(kind)];
}

const char* ConstraintKindName(ConstraintKind kind) {
  static const char* kNames[] = {"fix",      "coincident", "concentric", "equal",
                                 "parallel", "tangent",    "perpendicular", "mirror",
                                 "distance", "length",     "diameter",   "radius",
                                 "angle",    "horizontal", "vertical",   "midpoint"};
  return kNames[static_cast<int>(kind)];
}

std::string ObjectTypeLabel(const Object& o) {
  if (IsEntity(o)) return EntityKindName(KindOf(AsEntity(o)));
  return ConstraintKindName(KindOf(AsConstraint(o)));
}

std::vector<Pointer> PointersOf(const Constraint& c) {
  std::vector<Pointer> out;
  Constraint copy = c;
  RewritePointers(copy, [&out](Pointer p) {
    out.push_back(p);
    return p;
  });
  return out;
}

const char* PartRoleName(PartRole role) {
  switch (role) {
    case PartRole::kWhole:
      return "whole";
    case PartRole::kPoint:
      return "point";
    case PartRole::kStart:
      return "start";
    case PartRole::kEnd:
      return "end";
    case PartRole::kCenter:
      return "center";
    case PartRole::kStartPoint:
      return "start_point";
    case PartRole::kEndPoint:
      return "end_point";
  }
  return "?";
}

std::vector<PartRole> ReferrableParts(const Entity& e) {
  switch (KindOf(e)) {
    case EntityKind::kPoint:
      return {PartRole::kWhole, PartRole::kPoint};
    case EntityKind::kLine:
      return {PartRole::kWhole, PartRole::kStart, PartRole::kEnd};
    case EntityKind::kCircleArc:
      if (std::get<CircleArcEntity>(e).is_arc()) {
        return {PartRole::kWhole, PartRole::kCenter, PartRole::kStart, PartRole::kEnd};
      }
      return {PartRole::kWhole, PartRole::kCenter};
    case EntityKind::kInterpolatedSpline:
      return {PartRole::kWhole, PartRole::kStartPoint, PartRole::kEndPoint};
  }
  return {};
}

void ReferrableTable::Append(const Entity& e, uint32_t object_index, uint32_t entity_ordinal) {
  const auto parts = ReferrableParts(e);
  for (uint32_t k = 0; k < parts.size(); ++k) {
    entries.push_back({object_index, entity_ordinal, k, parts[k]});
  }
}

ReferrableTable BuildReferrableTable(const Sketch& s, size_t prefix_length) {
  ReferrableTable table;
  const size_t n = std::min(prefix_length, s.objects.size());
  uint32_t ordinal = 0;
  for (size_t i = 0; i < n; ++i) {
    if (IsEntity(s.objects[i])) {
      table.Append(AsEntity(s.objects[i]), static_cast<uint32_t>(i), ordinal++);
    }
  }
  return table;
}

// ------------------------------------------------------------------------ validation

namespace {

class Validator {
 public:
  explicit Validator(ValidationReport* report) : report_(report) {}

  void Fail(std::string path, std::string message) {
    report_->push_back({object_index_, std::move(path), std::move(message)});
  }

  void Real(const std::string& path, double v) {
    if (!std::isfinite(v)) Fail(path, "non-finite value");
  }

  void Vec(const std::string& path, const Vec2& v) {
    Real(path + ".x", v.x);
    Real(path + ".y", v.y);
  }

  void Ptr(const std::string& path, Pointer p) {
    if (p >= table_size_) {
      Fail(path, "pointer " + std::to_string(p) + " out of range (table size " +
                     std::to_string(table_size_) + ")");
    } else if (p >= kMaxPointerVocabulary) {
      Fail(path, "pointer " + std::to_string(p) + " exceeds the pointer vocabulary");
    }
  }

  void AtLeast(const std::string& path, size_t count, size_t bound) {
    if (count < bound) {
      Fail(path, "at_least=" + std::to_string(bound) + " unmet (" + std::to_string(count) + ")");
    }
  }

  void CheckEntity(const Entity& e) {
    const std::string name = EntityKindName(KindOf(e));
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, LineEntity>) {
            Vec(name + ".start", x.start);
            Vec(name + ".end", x.end);
          } else if constexpr (std::is_same_v<T, PointEntity>) {
            Vec(name + ".point", x.point);
          } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
            Vec(name + ".center", x.center);
            if (const auto* c = std::get_if<CircleParams>(&x.params)) {
              Real(name + ".circle_params.radius", c->radius);
            } else {
              const auto& a = std::get<ArcParams>(x.params);
              Vec(name + ".arc_params.start", a.start);
              Vec(name + ".arc_params.end", a.end);
            }
          } else {
            AtLeast(name + ".interp_points", x.interp_points.size(), 2);
            for (size_t i = 0; i < x.interp_points.size(); ++i) {
              Vec(name + ".interp_points[" + std::to_string(i) + "]", x.interp_points[i]);
            }
            Vec(name + ".start_derivative", x.start_derivative);
            Vec(name + ".end_derivative", x.end_derivative);
            if (const auto* t = std::get_if<TrimmedParams>(&x.params)) {
              Real(name + ".trimmed_params.start_phi", t->start_phi);
              Real(name + ".trimmed_params.end_phi", t->end_phi);
            }
          }
        },
        e);
  }

  void CheckConstraint(const Constraint& c) {
    const std::string name = ConstraintKindName(KindOf(c));
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (requires { x.entities; }) {
            const size_t bound = (T::kKind == ConstraintKind::kFix ||
                                  T::kKind == ConstraintKind::kHorizontal ||
                                  T::kKind == ConstraintKind::kVertical)
                                     ? 1
                                     : 2;
            AtLeast(name + ".entities", x.entities.size(), bound);
            for (size_t i = 0; i < x.entities.size(); ++i) {
              Ptr(name + ".entities[" + std::to_string(i) + "]", x.entities[i]);
            }
          } else if constexpr (std::is_same_v<T, MirrorConstraint>) {
            Ptr(name + ".mirror", x.mirror);
            AtLeast(name + ".mirrored_pairs", x.mirrored_pairs.size(), 1);
            for (size_t i = 0; i < x.mirrored_pairs.size(); ++i) {
              const std::string p = name + ".mirrored_pairs[" + std::to_string(i) + "]";
              Ptr(p + ".first", x.mirrored_pairs[i].first);
              Ptr(p + ".second", x.mirrored_pairs[i].second);
            }
          } else if constexpr (std::is_same_v<T, DistanceConstraint>) {
            Ptr(name + ".first", x.first);
            Ptr(name + ".second", x.second);
            Real(name + ".length", x.length);
            const bool wants_alignment = x.direction != Direction::kMinimum;
            if (wants_alignment != (x.params.index() == 0)) {
              Fail(name + ".additional_params", "branch disagrees with direction handler");
            }
          } else if constexpr (std::is_same_v<T, AngleConstraint>) {
            Ptr(name + ".first", x.first);
            Ptr(name + ".second", x.second);
            Real(name + ".angle", x.angle);
          } else if constexpr (std::is_same_v<T, MidpointConstraint>) {
            Ptr(name + ".midpoint", x.midpoint);
            if (const auto* ep = std::get_if<MidpointEndpoints>(&x.params)) {
              Ptr(name + ".endpoints.first", ep->first);
              Ptr(name + ".endpoints.second", ep->second);
            } else {
              Ptr(name + ".entity", std::get<MidpointEntityRef>(x.params).entity);
            }
          } else if constexpr (requires { x.length; }) {
            Ptr(name + ".entity", x.entity);
            Real(name + ".length", x.length);
          } else {
            Ptr(name + ".first", x.first);
            Ptr(name + ".second", x.second);
          }
        },
        c);
  }

  void Run(const Sketch& s, Ordering ordering) {
    const size_t full_table = BuildReferrableTable(s).size();
    size_t prefix_table = 0;
    for (size_t i = 0; i < s.objects.size(); ++i) {
      object_index_ = i;
      const Object& o = s.objects[i];
      if (IsEntity(o)) {
        CheckEntity(AsEntity(o));
        prefix_table += ReferrableParts(AsEntity(o)).size();
      } else {
        table_size_ = ordering == Ordering::kInterleaved ? prefix_table : full_table;
        CheckConstraint(AsConstraint(o));
      }
    }
  }

 private:
  ValidationReport* report_;
  size_t object_index_ = 0;
  size_t table_size_ = 0;
};

}  // namespace

ValidationReport ValidateSketch(const Sketch& s, Ordering ordering) {
  ValidationReport report;
  Validator(&report).Run(s, ordering);
  return report;
}

std::string FormatReport(const ValidationReport& report) {
  std::ostringstream os;
  for (const auto& v : report) {
    os << "object " << v.object_index << ": " << v.field_path << ": " << v.message << "\n";
  }
  return os.str();
}

// ------------------------------------------------------------------------ conversion
// Field positions follow the declaration order of the built-in schema messages.

namespace {

Value VecValue(const Vec2& v) {
  Value m = Value::Message(2);
  m.items[0] = Value::Real(v.x);
  m.items[1] = Value::Real(v.y);
  return m;
}

Value PtrValue(Pointer p) { return Value::Int(p); }

Value PtrList(const std::vector<Pointer>& ps) {
  Value list = Value::List();
  for (Pointer p : ps) list.items.push_back(PtrValue(p));
  return list;
}

Value PairValue(Pointer a, Pointer b) {
  Value m = Value::Message(2);
  m.items[0] = PtrValue(a);
  m.items[1] = PtrValue(b);
  return m;
}

Value EntityPayload(const Entity& e) {
  return std::visit(
      [](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LineEntity>) {
          Value m = Value::Message(3);
          m.items[0] = Value::Bool(x.is_construction);
          m.items[1] = VecValue(x.start);
          m.items[2] = VecValue(x.end);
          return m;
        } else if constexpr (std::is_same_v<T, PointEntity>) {
          Value m = Value::Message(2);
          m.items[0] = Value::Bool(x.is_construction);
          m.items[1] = VecValue(x.point);
          return m;
        } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
          Value m = Value::Message(3);
          m.items[0] = Value::Bool(x.is_construction);
          m.items[1] = VecValue(x.center);
          if (const auto* c = std::get_if<CircleParams>(&x.params)) {
            Value p = Value::Message(1);
            p.items[0] = Value::Real(c->radius);
            m.items[2] = Value::Oneof(0, std::move(p));
          } else {
            const auto& a = std::get<ArcParams>(x.params);
            Value p = Value::Message(3);
            p.items[0] = VecValue(a.start);
            p.items[1] = VecValue(a.end);
            p.items[2] = Value::Bool(a.is_clockwise);
            m.items[2] = Value::Oneof(1, std::move(p));
          }
          return m;
        } else {
          Value m = Value::Message(6);
          m.items[0] = Value::Bool(x.is_construction);
          m.items[1] = Value::Bool(x.is_periodic);
          m.items[2] = Value::List();
          for (const auto& p : x.interp_points) m.items[2].items.push_back(VecValue(p));
          m.items[3] = VecValue(x.start_derivative);
          m.items[4] = VecValue(x.end_derivative);
          if (const auto* t = std::get_if<TrimmedParams>(&x.params)) {
            Value p = Value::Message(2);
            p.items[0] = Value::Real(t->start_phi);
            p.items[1] = Value::Real(t->end_phi);
            m.items[5] = Value::Oneof(1, std::move(p));
          } else {
            m.items[5] = Value::Oneof(0, Value::Message(0));
          }
          return m;
        }
      },
      e);
}

Value ConstraintPayload(const Constraint& c) {
  return std::visit(
      [](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (requires { x.entities; }) {
          Value m = Value::Message(1);
          m.items[0] = PtrList(x.entities);
          return m;
        } else if constexpr (std::is_same_v<T, MirrorConstraint>) {
          Value m = Value::Message(2);
          m.items[0] = PtrValue(x.mirror);
          m.items[1] = Value::List();
          for (const auto& pr : x.mirrored_pairs) {
            m.items[1].items.push_back(PairValue(pr.first, pr.second));
          }
          return m;
        } else if constexpr (std::is_same_v<T, DistanceConstraint>) {
          Value m = Value::Message(5);
          m.items[0] = PtrValue(x.first);
          m.items[1] = PtrValue(x.second);
          m.items[2] = Value::Int(static_cast<int64_t>(x.direction));
          m.items[3] = Value::Real(x.length);
          if (const auto* a = std::get_if<Alignment>(&x.params)) {
            m.items[4] = Value::Oneof(0, Value::Int(static_cast<int64_t>(*a)));
          } else {
            const auto& h = std::get<HalfSpaceParams>(x.params);
            Value p = Value::Message(2);
            p.items[0] = Value::Int(static_cast<int64_t>(h.half_space_first));
            p.items[1] = Value::Int(static_cast<int64_t>(h.half_space_second));
            m.items[4] = Value::Oneof(1, std::move(p));
          }
          return m;
        } else if constexpr (std::is_same_v<T, AngleConstraint>) {
          Value m = Value::Message(3);
          m.items[0] = PtrValue(x.first);
          m.items[1] = PtrValue(x.second);
          m.items[2] = Value::Real(x.angle);
          return m;
        } else if constexpr (std::is_same_v<T, MidpointConstraint>) {
          Value m = Value::Message(2);
          m.items[0] = PtrValue(x.midpoint);
          if (const auto* ep = std::get_if<MidpointEndpoints>(&x.params)) {
            m.items[1] = Value::Oneof(0, PairValue(ep->first, ep->second));
          } else {
            m.items[1] = Value::Oneof(1, PtrValue(std::get<MidpointEntityRef>(x.params).entity));
          }
          return m;
        } else if constexpr (requires { x.length; }) {
          Value m = Value::Message(2);
          m.items[0] = PtrValue(x.entity);
          m.items[1] = Value::Real(x.length);
          return m;
        } else {
          return PairValue(x.first, x.second);
        }
      },
      c);
}

Value ObjectValue(const Object& o) {
  Value inner = Value::Message(1);
  Value obj = Value::Message(1);
  if (IsEntity(o)) {
    const Entity& e = AsEntity(o);
    inner.items[0] = Value::Oneof(static_cast<int>(e.index()), EntityPayload(e));
    obj.items[0] = Value::Oneof(0, std::move(inner));
  } else {
    const Constraint& c = AsConstraint(o);
    inner.items[0] = Value::Oneof(static_cast<int>(c.index()), ConstraintPayload(c));
    obj.items[0] = Value::Oneof(1, std::move(inner));
  }
  return obj;
}

// Readers are lenient about unset scalars and sub-messages (they take their defaults, which is
// what a wire message omitting them means) but strict about types and unset oneofs.

[[noreturn]] void Bad(const std::string& what) {
  throw std::invalid_argument("malformed sketch value: " + what);
}

const Value& Field(const Value& msg, size_t index, const char* what) {
  static const Value kUnset;
  if (!msg.is_set()) return kUnset;
  if (msg.type != Value::Type::kMessage || index >= msg.items.size()) Bad(what);
  return msg.items[index];
}

bool ReadBool(const Value& v, const char* what) {
  if (!v.is_set()) return false;
  if (v.type != Value::Type::kBool) Bad(what);
  return v.boolean;
}

int64_t ReadInt(const Value& v, const char* what) {
  if (!v.is_set()) return 0;
  if (v.type != Value::Type::kInt) Bad(what);
  return v.integer;
}

Pointer ReadPtr(const Value& v, const char* what) {
  const int64_t p = ReadInt(v, what);
  if (p < 0 || p > static_cast<int64_t>(UINT32_MAX)) Bad(what);
  return static_cast<Pointer>(p);
}

double ReadReal(const Value& v, const char* what) {
  if (!v.is_set()) return 0.0;
  if (v.type != Value::Type::kReal) Bad(what);
  return v.real;
}

Vec2 ReadVec(const Value& v, const char* what) {
  return {ReadReal(Field(v, 0, what), what), ReadReal(Field(v, 1, what), what)};
}

const Value& ReadOneof(const Value& v, int branches, const char* what) {
  if (v.type != Value::Type::kOneof || v.branch < 0 || v.branch >= branches ||
      v.items.size() != 1) {
    Bad(std::string(what) + " (oneof unset)");
  }
  return v;
}

const std::vector<Value>& ReadList(const Value& v, const char* what) {
  static const std::vector<Value> kEmpty;
  if (!v.is_set()) return kEmpty;
  if (v.type != Value::Type::kList) Bad(what);
  return v.items;
}

std::vector<Pointer> ReadPtrList(const Value& v, const char* what) {
  std::vector<Pointer> out;
  for (const auto& item : ReadList(v, what)) out.push_back(ReadPtr(item, what));
  return out;
}

template <typename E>
E ReadEnum(const Value& v, int cardinality, const char* what) {
  const int64_t x = ReadInt(v, what);
  if (x < 0 || x >= cardinality) Bad(what);
  return static_cast<E>(x);
}

Entity EntityFrom(int branch, const Value& m) {
  switch (static_cast<EntityKind>(branch)) {
    case EntityKind::kLine:
      return LineEntity{ReadBool(Field(m, 0, "line"), "line.is_construction"),
                        ReadVec(Field(m, 1, "line"), "line.start"),
                        ReadVec(Field(m, 2, "line"), "line.end")};
    case EntityKind::kPoint:
      return PointEntity{ReadBool(Field(m, 0, "point"), "point.is_construction"),
                         ReadVec(Field(m, 1, "point"), "point.point")};
    case EntityKind::kCircleArc: {
      CircleArcEntity c;
      c.is_construction = ReadBool(Field(m, 0, "circle_arc"), "circle_arc.is_construction");
      c.center = ReadVec(Field(m, 1, "circle_arc"), "circle_arc.center");
      const Value& o = ReadOneof(Field(m, 2, "circle_arc"), 2, "circle_arc.additional_params");
      const Value& p = o.items[0];
      if (o.branch == 0) {
        c.params = CircleParams{ReadReal(Field(p, 0, "circle_params"), "radius")};
      } else {
        c.params = ArcParams{ReadVec(Field(p, 0, "arc_params"), "arc_params.start"),
                             ReadVec(Field(p, 1, "arc_params"), "arc_params.end"),
                             ReadBool(Field(p, 2, "arc_params"), "arc_params.is_clockwise")};
      }
      return c;
    }
    case EntityKind::kInterpolatedSpline: {
      InterpolatedSplineEntity s;
      s.is_construction = ReadBool(Field(m, 0, "spline"), "spline.is_construction");
      s.is_periodic = ReadBool(Field(m, 1, "spline"), "spline.is_periodic");
      for (const auto& pt : ReadList(Field(m, 2, "spline"), "spline.interp_points")) {
        s.interp_points.push_back(ReadVec(pt, "spline.interp_points"));
      }
      s.start_derivative = ReadVec(Field(m, 3, "spline"), "spline.start_derivative");
      s.end_derivative = ReadVec(Field(m, 4, "spline"), "spline.end_derivative");
      const Value& o = ReadOneof(Field(m, 5, "spline"), 2, "spline.additional_params");
      if (o.branch == 1) {
        const Value& p = o.items[0];
        s.params = TrimmedParams{ReadReal(Field(p, 0, "trimmed_params"), "start_phi"),
                                 ReadReal(Field(p, 1, "trimmed_params"), "end_phi")};
      } else {
        s.params = UntrimmedParams{};
      }
      return s;
    }
  }
  Bad("entity kind");
}

template <typename T>
T ReadPair(const Value& m, const char* what) {
  T out;
  out.first = ReadPtr(Field(m, 0, what), what);
  out.second = ReadPtr(Field(m, 1, what), what);
  return out;
}

template <typename T>
T ReadMeasure(const Value& m, const char* what) {
  T out;
  out.entity = ReadPtr(Field(m, 0, what), what);
  out.length = ReadReal(Field(m, 1, what), what);
  return out;
}

template <typename T>
T ReadListConstraint(const Value& m, const char* what) {
  T out;
  out.entities = ReadPtrList(Field(m, 0, what), what);
  return out;
}

Constraint ConstraintFrom(int branch, const Value& m) {
  switch (static_cast<ConstraintKind>(branch)) {
    case ConstraintKind::kFix:
      return ReadListConstraint<FixConstraint>(m, "fix");
    case ConstraintKind::kCoincident:
      return ReadListConstraint<CoincidentConstraint>(m, "coincident");
    case ConstraintKind::kConcentric:
      return ReadListConstraint<ConcentricConstraint>(m, "concentric");
    case ConstraintKind::kEqual:
      return ReadListConstraint<EqualConstraint>(m, "equal");
    case ConstraintKind::kParallel:
      return ReadListConstraint<ParallelConstraint>(m, "parallel");
    case ConstraintKind::kTangent:
      return ReadPair<TangentConstraint>(m, "tangent");
    case ConstraintKind::kPerpendicular:
      return ReadPair<PerpendicularConstraint>(m, "perpendicular");
    case ConstraintKind::kMirror: {
      MirrorConstraint c;
      c.mirror = ReadPtr(Field(m, 0, "mirror"), "mirror.mirror");
      for (const auto& pr : ReadList(Field(m, 1, "mirror"), "mirror.mirrored_pairs")) {
        const auto p = ReadPair<PointerPairConstraint<ConstraintKind::kMirror>>(pr, "pair");
        c.mirrored_pairs.push_back({p.first, p.second});
      }
      return c;
    }
    case ConstraintKind::kDistance: {
      DistanceConstraint c;
      c.first = ReadPtr(Field(m, 0, "distance"), "distance.first");
      c.second = ReadPtr(Field(m, 1, "distance"), "distance.second");
      c.direction = ReadEnum<Direction>(Field(m, 2, "distance"), 3, "distance.direction");
      c.length = ReadReal(Field(m, 3, "distance"), "distance.length");
      const Value& o = ReadOneof(Field(m, 4, "distance"), 2, "distance.additional_params");
      if (o.branch == 0) {
        c.params = ReadEnum<Alignment>(o.items[0], 2, "distance.alignment");
      } else {
        const Value& p = o.items[0];
        c.params = HalfSpaceParams{
            ReadEnum<HalfSpace>(Field(p, 0, "half_space_params"), 3, "half_space_first"),
            ReadEnum<HalfSpace>(Field(p, 1, "half_space_params"), 3, "half_space_second")};
      }
      return c;
    }
    case ConstraintKind::kLength:
      return ReadMeasure<LengthConstraint>(m, "length");
    case ConstraintKind::kDiameter:
      return ReadMeasure<DiameterConstraint>(m, "diameter");
    case ConstraintKind::kRadius:
      return ReadMeasure<RadiusConstraint>(m, "radius");
    case ConstraintKind::kAngle: {
      AngleConstraint c;
      c.first = ReadPtr(Field(m, 0, "angle"), "angle.first");
      c.second = ReadPtr(Field(m, 1, "angle"), "angle.second");
      c.angle = ReadReal(Field(m, 2, "angle"), "angle.angle");
      return c;
    }
    case ConstraintKind::kHorizontal:
      return ReadListConstraint<HorizontalConstraint>(m, "horizontal");
    case ConstraintKind::kVertical:
      return ReadListConstraint<VerticalConstraint>(m, "vertical");
    case ConstraintKind::kMidpoint: {
      MidpointConstraint c;
      c.midpoint = ReadPtr(Field(m, 0, "midpoint"), "midpoint.midpoint");
      const Value& o = ReadOneof(Field(m, 1, "midpoint"), 2, "midpoint.additional_params");
      if (o.branch == 0) {
        const auto p = ReadPair<MidpointEndpoints>(o.items[0], "midpoint.endpoints");
        c.params = p;
      } else {
        c.params = MidpointEntityRef{ReadPtr(o.items[0], "midpoint.entity")};
      }
      return c;
    }
  }
  Bad("constraint kind");
}

}  // namespace

Value SketchToValue(const Sketch& s) {
  Value root = Value::Message(1);
  root.items[0] = Value::List();
  for (const auto& o : s.objects) root.items[0].items.push_back(ObjectValue(o));
  return root;
}

Object ObjectFromValue(const Value& object_value) {
  const Value& kind = ReadOneof(Field(object_value, 0, "object"), 2, "objects.kind");
  const Value& inner = kind.items[0];
  if (kind.branch == 0) {
    const Value& e = ReadOneof(Field(inner, 0, "entity"), kNumEntityKinds, "entity.kind");
    return EntityFrom(e.branch, e.items[0]);
  }
  const Value& c =
      ReadOneof(Field(inner, 0, "constraint"), kNumConstraintKinds, "constraint.kind");
  return ConstraintFrom(c.branch, c.items[0]);
}

Sketch SketchFromValue(const Value& v) {
  if (v.type != Value::Type::kMessage) Bad("root is not a message");
  Sketch s;
  for (const auto& o : ReadList(Field(v, 0, "sketch"), "objects")) {
    s.objects.push_back(ObjectFromValue(o));
  }
  return s;
}

}  // namespace sketchgen
