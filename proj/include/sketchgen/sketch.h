/*!
 * \file sketchgen/sketch.h
 * \brief Typed sketch objects, validation, and the referrable-parts table pointers index into.
 */
#ifndef SKETCHGEN_SKETCH_H_
#define SKETCHGEN_SKETCH_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "sketchgen/value.h"

namespace sketchgen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

// ----------------------------------------------------------------------------- entities

struct LineEntity {
  bool is_construction = false;
  Vec2 start;
  Vec2 end;
  bool operator==(const LineEntity&) const = default;
};

struct PointEntity {
  bool is_construction = false;
  Vec2 point;
  bool operator==(const PointEntity&) const = default;
};

struct CircleParams {
  double radius = 0.0;
  bool operator==(const CircleParams&) const = default;
};

struct ArcParams {
  Vec2 start;
  Vec2 end;
  bool is_clockwise = false;
  bool operator==(const ArcParams&) const = default;
};

struct CircleArcEntity {
  bool is_construction = false;
  Vec2 center;
  std::variant<CircleParams, ArcParams> params;
  bool operator==(const CircleArcEntity&) const = default;
  bool is_arc() const { return params.index() == 1; }
};

struct UntrimmedParams {
  bool operator==(const UntrimmedParams&) const = default;
};

struct TrimmedParams {
  double start_phi = 0.0;
  double end_phi = 0.0;
  bool operator==(const TrimmedParams&) const = default;
};

struct InterpolatedSplineEntity {
  bool is_construction = false;
  bool is_periodic = false;
  std::vector<Vec2> interp_points;
  Vec2 start_derivative;
  Vec2 end_derivative;
  std::variant<UntrimmedParams, TrimmedParams> params;
  bool operator==(const InterpolatedSplineEntity&) const = default;
};

/*! Alternative order matches the Entity oneof (line, point, circle_arc, interpolated_spline). */
using Entity = std::variant<LineEntity, PointEntity, CircleArcEntity, InterpolatedSplineEntity>;

enum class EntityKind { kLine = 0, kPoint = 1, kCircleArc = 2, kInterpolatedSpline = 3 };

// -------------------------------------------------------------------------- constraints

using Pointer = uint32_t;

enum class ConstraintKind {
  kFix = 0,
  kCoincident,
  kConcentric,
  kEqual,
  kParallel,
  kTangent,
  kPerpendicular,
  kMirror,
  kDistance,
  kLength,
  kDiameter,
  kRadius,
  kAngle,
  kHorizontal,
  kVertical,
  kMidpoint,
};

inline constexpr int kNumConstraintKinds = 16;
inline constexpr int kNumEntityKinds = 4;

template <ConstraintKind K>
struct PointerListConstraint {
  static constexpr ConstraintKind kKind = K;
  std::vector<Pointer> entities;
  bool operator==(const PointerListConstraint&) const = default;
};

template <ConstraintKind K>
struct PointerPairConstraint {
  static constexpr ConstraintKind kKind = K;
  Pointer first = 0;
  Pointer second = 0;
  bool operator==(const PointerPairConstraint&) const = default;
};

template <ConstraintKind K>
struct MeasureConstraint {
  static constexpr ConstraintKind kKind = K;
  Pointer entity = 0;
  double length = 0.0;
  bool operator==(const MeasureConstraint&) const = default;
};

using FixConstraint = PointerListConstraint<ConstraintKind::kFix>;
using CoincidentConstraint = PointerListConstraint<ConstraintKind::kCoincident>;
using ConcentricConstraint = PointerListConstraint<ConstraintKind::kConcentric>;
using EqualConstraint = PointerListConstraint<ConstraintKind::kEqual>;
using ParallelConstraint = PointerListConstraint<ConstraintKind::kParallel>;
using HorizontalConstraint = PointerListConstraint<ConstraintKind::kHorizontal>;
using VerticalConstraint = PointerListConstraint<ConstraintKind::kVertical>;
using TangentConstraint = PointerPairConstraint<ConstraintKind::kTangent>;
using PerpendicularConstraint = PointerPairConstraint<ConstraintKind::kPerpendicular>;
using LengthConstraint = MeasureConstraint<ConstraintKind::kLength>;
using DiameterConstraint = MeasureConstraint<ConstraintKind::kDiameter>;
using RadiusConstraint = MeasureConstraint<ConstraintKind::kRadius>;

struct MirrorPair {
  Pointer first = 0;
  Pointer second = 0;
  bool operator==(const MirrorPair&) const = default;
};

struct MirrorConstraint {
  static constexpr ConstraintKind kKind = ConstraintKind::kMirror;
  Pointer mirror = 0;
  std::vector<MirrorPair> mirrored_pairs;
  bool operator==(const MirrorConstraint&) const = default;
};

enum class Direction { kHorizontal = 0, kVertical = 1, kMinimum = 2 };
enum class Alignment { kAligned = 0, kAntiAligned = 1 };
enum class HalfSpace { kNotAvailable = 0, kLeft = 1, kRight = 2 };

struct HalfSpaceParams {
  HalfSpace half_space_first = HalfSpace::kNotAvailable;
  HalfSpace half_space_second = HalfSpace::kNotAvailable;
  bool operator==(const HalfSpaceParams&) const = default;
};

struct DistanceConstraint {
  static constexpr ConstraintKind kKind = ConstraintKind::kDistance;
  Pointer first = 0;
  Pointer second = 0;
  Direction direction = Direction::kHorizontal;
  double length = 0.0;
  /*! Must agree with `direction`: alignment for HORIZONTAL/VERTICAL, half spaces for MINIMUM. */
  std::variant<Alignment, HalfSpaceParams> params;
  bool operator==(const DistanceConstraint&) const = default;
};

struct AngleConstraint {
  static constexpr ConstraintKind kKind = ConstraintKind::kAngle;
  Pointer first = 0;
  Pointer second = 0;
  double angle = 0.0;
  bool operator==(const AngleConstraint&) const = default;
};

struct MidpointEndpoints {
  Pointer first = 0;
  Pointer second = 0;
  bool operator==(const MidpointEndpoints&) const = default;
};

struct MidpointEntityRef {
  Pointer entity = 0;
  bool operator==(const MidpointEntityRef&) const = default;
};

struct MidpointConstraint {
  static constexpr ConstraintKind kKind = ConstraintKind::kMidpoint;
  Pointer midpoint = 0;
  std::variant<MidpointEndpoints, MidpointEntityRef> params;
  bool operator==(const MidpointConstraint&) const = default;
};

/*! Alternative order matches the Constraint oneof and ConstraintKind. */
using Constraint =
    std::variant<FixConstraint, CoincidentConstraint, ConcentricConstraint, EqualConstraint,
                 ParallelConstraint, TangentConstraint, PerpendicularConstraint, MirrorConstraint,
                 DistanceConstraint, LengthConstraint, DiameterConstraint, RadiusConstraint,
                 AngleConstraint, HorizontalConstraint, VerticalConstraint, MidpointConstraint>;

using Object = std::variant<Entity, Constraint>;

struct Sketch {
  std::vector<Object> objects;
  bool operator==(const Sketch&) const = default;
};

enum class Ordering { kConcatenated, kInterleaved };

// ---------------------------------------------------------------------------- helpers

inline bool IsEntity(const Object& o) { return o.index() == 0; }
inline const Entity& AsEntity(const Object& o) { return std::get<Entity>(o); }
inline const Constraint& AsConstraint(const Object& o) { return std::get<Constraint>(o); }
inline EntityKind KindOf(const Entity& e) { return static_cast<EntityKind>(e.index()); }
inline ConstraintKind KindOf(const Constraint& c) { return static_cast<ConstraintKind>(c.index()); }
bool IsConstruction(const Entity& e);

/*! Lower-case names used by the JSON format and field paths (e.g. "circle_arc", "coincident"). */
const char* EntityKindName(EntityKind kind);
const char* ConstraintKindName(ConstraintKind kind);
/*! Type label used when binning by object-type sequence ("line", "arc", "coincident", ...). */
std::string ObjectTypeLabel(const Object& o);

/*! Every pointer held by a constraint, in field order. */
std::vector<Pointer> PointersOf(const Constraint& c);
/*! Rewrites every pointer of `c` through `fn`. */
template <typename Fn>
void RewritePointers(Constraint& c, Fn&& fn);

// ----------------------------------------------------------------------- referrables

enum class PartRole { kWhole, kPoint, kStart, kEnd, kCenter, kStartPoint, kEndPoint };

const char* PartRoleName(PartRole role);

/*!
 * Pointable parts of an entity, in fixed order:
 *   point -> [whole, point]; line -> [whole, start, end]; circle -> [whole, center];
 *   arc -> [whole, center, start, end]; spline -> [whole, start_point, end_point].
 */
std::vector<PartRole> ReferrableParts(const Entity& e);

struct ReferrableEntry {
  /*! Position of the entity in Sketch::objects. */
  uint32_t object_index = 0;
  /*! Ordinal of the entity among entities. */
  uint32_t entity_ordinal = 0;
  uint32_t part_index = 0;
  PartRole role = PartRole::kWhole;
  bool operator==(const ReferrableEntry&) const = default;
};

struct ReferrableTable {
  std::vector<ReferrableEntry> entries;
  size_t size() const { return entries.size(); }
  void Append(const Entity& e, uint32_t object_index, uint32_t entity_ordinal);
};

/*! Table for objects[0, prefix_length) (defaults to the whole sketch). */
ReferrableTable BuildReferrableTable(const Sketch& s, size_t prefix_length = SIZE_MAX);

/*! Largest pointer value the triplet format can express. */
inline constexpr uint32_t kMaxPointerVocabulary = 256;

// ------------------------------------------------------------------------ validation

/*! Raised by codecs asked to encode a sketch that fails ValidateSketch. */
class InvalidSketchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  size_t object_index = 0;
  std::string field_path;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/*!
 * Empty report iff the sketch is structurally valid: finite reals, spline has >= 2 points,
 * repeated fields meet their at_least bound, Distance params agree with the direction handler,
 * and every pointer indexes the referrable table (prefix table for interleaved, full table for
 * concatenated) and fits the pointer vocabulary.
 */
ValidationReport ValidateSketch(const Sketch& s, Ordering ordering = Ordering::kInterleaved);
std::string FormatReport(const ValidationReport& report);

// ------------------------------------------------------------------------ conversion

Value SketchToValue(const Sketch& s);
/*! Throws std::invalid_argument when the value is not a complete Sketch message. */
Sketch SketchFromValue(const Value& v);
Object ObjectFromValue(const Value& object_value);

// ----------------------------------------------------------------- template details

template <typename Fn>
void RewritePointers(Constraint& c, Fn&& fn) {
  std::visit(
      [&fn](auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (requires { k.entities; }) {
          for (auto& p : k.entities) p = fn(p);
        } else if constexpr (std::is_same_v<T, MirrorConstraint>) {
          k.mirror = fn(k.mirror);
          for (auto& pr : k.mirrored_pairs) {
            pr.first = fn(pr.first);
            pr.second = fn(pr.second);
          }
        } else if constexpr (std::is_same_v<T, MidpointConstraint>) {
          k.midpoint = fn(k.midpoint);
          if (auto* ep = std::get_if<MidpointEndpoints>(&k.params)) {
            ep->first = fn(ep->first);
            ep->second = fn(ep->second);
          } else {
            auto& ref = std::get<MidpointEntityRef>(k.params);
            ref.entity = fn(ref.entity);
          }
        } else if constexpr (requires { k.entity; }) {
          k.entity = fn(k.entity);
        } else {
          k.first = fn(k.first);
          k.second = fn(k.second);
        }
      },
      c);
}

}  // namespace sketchgen

#endif  // SKETCHGEN_SKETCH_H_
