/*!
 * \file sketchgen/geometry.cc
 */
#include "sketchgen/geometry.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

namespace sketchgen {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 Add(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 Sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 Scale(Vec2 a, double s) { return {a.x * s, a.y * s}; }
double Dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double Cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double Norm(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 Unit(Vec2 a) {
  const double n = Norm(a);
  return n > 0.0 ? Scale(a, 1.0 / n) : Vec2{0.0, 0.0};
}

double WrapAngle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// ---------------------------------------------------------------------- parameter layout

void Pack(const Entity& e, std::vector<double>* out) {
  auto vec = [out](Vec2 v) {
    out->push_back(v.x);
    out->push_back(v.y);
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LineEntity>) {
          vec(v.start);
          vec(v.end);
        } else if constexpr (std::is_same_v<T, PointEntity>) {
          vec(v.point);
        } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
          vec(v.center);
          if (const auto* arc = std::get_if<ArcParams>(&v.params)) {
            vec(arc->start);
            vec(arc->end);
          } else {
            out->push_back(std::get<CircleParams>(v.params).radius);
          }
        } else {
          for (const Vec2& p : v.interp_points) vec(p);
          vec(v.start_derivative);
          vec(v.end_derivative);
          if (const auto* t = std::get_if<TrimmedParams>(&v.params)) {
            out->push_back(t->start_phi);
            out->push_back(t->end_phi);
          }
        }
      },
      e);
}

void Unpack(const double* p, Entity* e) {
  auto vec = [&p]() {
    Vec2 v{p[0], p[1]};
    p += 2;
    return v;
  };
  std::visit(
      [&](auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LineEntity>) {
          v.start = vec();
          v.end = vec();
        } else if constexpr (std::is_same_v<T, PointEntity>) {
          v.point = vec();
        } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
          v.center = vec();
          if (auto* arc = std::get_if<ArcParams>(&v.params)) {
            arc->start = vec();
            arc->end = vec();
          } else {
            std::get<CircleParams>(v.params).radius = *p;
          }
        } else {
          for (Vec2& q : v.interp_points) q = vec();
          v.start_derivative = vec();
          v.end_derivative = vec();
          if (auto* t = std::get_if<TrimmedParams>(&v.params)) {
            t->start_phi = p[0];
            t->end_phi = p[1];
          }
        }
      },
      *e);
}

/*! A pointee resolved to the parameter layout. */
struct Ref {
  EntityKind kind;
  PartRole role;
  bool arc = false;
  size_t offset = 0;
  size_t num_points = 0;

  bool is_point() const {
    return role != PartRole::kWhole || kind == EntityKind::kPoint;
  }
  bool is_line() const { return role == PartRole::kWhole && kind == EntityKind::kLine; }
  bool is_circle() const { return role == PartRole::kWhole && kind == EntityKind::kCircleArc; }

  /*! Parameter index of the x coordinate of a point-like pointee. */
  size_t point_index() const {
    switch (role) {
      case PartRole::kWhole:
      case PartRole::kPoint:
      case PartRole::kStart:
        return kind == EntityKind::kCircleArc ? offset + 2 : offset;
      case PartRole::kEnd:
        return kind == EntityKind::kCircleArc ? offset + 4 : offset + 2;
      case PartRole::kCenter:
      case PartRole::kStartPoint:
        return offset;
      case PartRole::kEndPoint:
        return offset + 2 * (num_points - 1);
    }
    return offset;
  }
  std::string describe() const {
    return std::string(EntityKindName(kind)) + (arc ? " (arc)" : "") + " part " +
           PartRoleName(role);
  }
};

using Theta = std::vector<double>;

Vec2 PointAt(const Theta& t, const Ref& r) {
  const size_t i = r.point_index();
  return {t[i], t[i + 1]};
}

struct Segment {
  Vec2 a, b;
};

Segment LineAt(const Theta& t, const Ref& r) {
  return {{t[r.offset], t[r.offset + 1]}, {t[r.offset + 2], t[r.offset + 3]}};
}

struct CircleGeom {
  Vec2 c;
  double r;
};

CircleGeom CircleAt(const Theta& t, const Ref& r) {
  const Vec2 c{t[r.offset], t[r.offset + 1]};
  if (r.arc) return {c, Norm(Sub(Vec2{t[r.offset + 2], t[r.offset + 3]}, c))};
  return {c, t[r.offset + 2]};
}

/*! Signed distance of p from the line through s (positive to the left of its direction). */
double SignedDistance(Vec2 p, const Segment& s) {
  const Vec2 d = Sub(s.b, s.a);
  const double n = Norm(d);
  if (n == 0.0) return Norm(Sub(p, s.a));
  return Cross(d, Sub(p, s.a)) / n;
}

Vec2 Reflect(Vec2 p, const Segment& axis) {
  const Vec2 u = Unit(Sub(axis.b, axis.a));
  const Vec2 rel = Sub(p, axis.a);
  const Vec2 along = Scale(u, Dot(rel, u));
  const Vec2 perp = Sub(rel, along);
  return Add(axis.a, Sub(along, perp));
}

/*! Anchor point of any pointee: the point itself, a line's midpoint, a circle's center. */
Vec2 AnchorAt(const Theta& t, const Ref& r) {
  if (r.is_point()) return PointAt(t, r);
  if (r.is_line()) {
    const Segment s = LineAt(t, r);
    return Scale(Add(s.a, s.b), 0.5);
  }
  if (r.is_circle()) return CircleAt(t, r).c;
  throw GeometryError("no anchor point for " + r.describe());
}

class Builder {
 public:
  explicit Builder(ResidualSystem* sys) : sys_(sys) {}

  void Run() {
    const Sketch& s = sys_->sketch;
    for (size_t i = 0; i < s.objects.size(); ++i) {
      if (!IsEntity(s.objects[i])) continue;
      const Entity& e = AsEntity(s.objects[i]);
      sys_->entity_offset.push_back(sys_->params.size());
      Pack(e, &sys_->params);
      entities_.push_back(&e);
    }
    sys_->frozen.assign(sys_->params.size(), 0);
    table_ = BuildReferrableTable(s);
    for (size_t i = 0; i < s.objects.size(); ++i) {
      if (IsEntity(s.objects[i])) continue;
      object_index_ = i;
      AddConstraint(AsConstraint(s.objects[i]));
    }
    for (size_t k = 0; k < entities_.size(); ++k) {
      const auto* ce = std::get_if<CircleArcEntity>(entities_[k]);
      if (ce == nullptr || !ce->is_arc()) continue;
      const size_t o = sys_->entity_offset[k];
      Emit("arc_radius", 1, [o](const Theta& t, std::vector<double>* out) {
        const Vec2 c{t[o], t[o + 1]};
        out->push_back(Norm(Sub(Vec2{t[o + 2], t[o + 3]}, c)) -
                       Norm(Sub(Vec2{t[o + 4], t[o + 5]}, c)));
      });
    }
  }

 private:
  using Fn = std::function<void(const Theta&, std::vector<double>*)>;

  void Emit(const std::string& label, int size, Fn fn) {
    sys_->block_labels.push_back(label);
    sys_->block_sizes.push_back(size);
    sys_->blocks.push_back(std::move(fn));
  }

  [[noreturn]] void Incompatible(const std::string& what) const {
    throw GeometryError("object " + std::to_string(object_index_) + ": " + what);
  }

  Ref Resolve(Pointer p) const {
    if (p >= table_.size()) Incompatible("pointer " + std::to_string(p) + " out of range");
    const ReferrableEntry& entry = table_.entries[p];
    const Entity& e = *entities_[entry.entity_ordinal];
    Ref r;
    r.kind = KindOf(e);
    r.role = entry.role;
    r.offset = sys_->entity_offset[entry.entity_ordinal];
    if (const auto* ce = std::get_if<CircleArcEntity>(&e)) r.arc = ce->is_arc();
    if (const auto* sp = std::get_if<InterpolatedSplineEntity>(&e)) {
      r.num_points = sp->interp_points.size();
    }
    return r;
  }

  void RequireLine(const Ref& r, const char* what) const {
    if (!r.is_line()) Incompatible(std::string(what) + " needs a line, got " + r.describe());
  }

  void RequireCircle(const Ref& r, const char* what) const {
    if (!r.is_circle()) Incompatible(std::string(what) + " needs a circle or arc, got " + r.describe());
  }

  void Freeze(const Ref& r) {
    if (r.role == PartRole::kWhole && r.kind != EntityKind::kPoint) {
      const size_t k = std::find(sys_->entity_offset.begin(), sys_->entity_offset.end(), r.offset) -
                       sys_->entity_offset.begin();
      const size_t end = k + 1 < sys_->entity_offset.size() ? sys_->entity_offset[k + 1]
                                                            : sys_->params.size();
      for (size_t i = r.offset; i < end; ++i) sys_->frozen[i] = 1;
      return;
    }
    const size_t i = r.point_index();
    sys_->frozen[i] = sys_->frozen[i + 1] = 1;
  }

  void Coincident(const std::vector<Pointer>& ptrs) {
    const Ref a = Resolve(ptrs[0]);
    for (size_t k = 1; k < ptrs.size(); ++k) {
      const Ref b = Resolve(ptrs[k]);
      if (a.is_point() && b.is_point()) {
        Emit("coincident", 2, [a, b](const Theta& t, std::vector<double>* out) {
          const Vec2 d = Sub(PointAt(t, b), PointAt(t, a));
          out->push_back(d.x);
          out->push_back(d.y);
        });
      } else if ((a.is_point() && b.is_line()) || (a.is_line() && b.is_point())) {
        const Ref p = a.is_point() ? a : b;
        const Ref l = a.is_line() ? a : b;
        Emit("coincident", 1, [p, l](const Theta& t, std::vector<double>* out) {
          out->push_back(SignedDistance(PointAt(t, p), LineAt(t, l)));
        });
      } else if ((a.is_point() && b.is_circle()) || (a.is_circle() && b.is_point())) {
        const Ref p = a.is_point() ? a : b;
        const Ref c = a.is_circle() ? a : b;
        Emit("coincident", 1, [p, c](const Theta& t, std::vector<double>* out) {
          const CircleGeom g = CircleAt(t, c);
          out->push_back(Norm(Sub(PointAt(t, p), g.c)) - g.r);
        });
      } else if (a.is_line() && b.is_line()) {
        Emit("coincident", 2, [a, b](const Theta& t, std::vector<double>* out) {
          const Segment la = LineAt(t, a), lb = LineAt(t, b);
          out->push_back(SignedDistance(lb.a, la));
          out->push_back(SignedDistance(lb.b, la));
        });
      } else if (a.is_circle() && b.is_circle()) {
        Emit("coincident", 3, [a, b](const Theta& t, std::vector<double>* out) {
          const CircleGeom ga = CircleAt(t, a), gb = CircleAt(t, b);
          out->push_back(gb.c.x - ga.c.x);
          out->push_back(gb.c.y - ga.c.y);
          out->push_back(gb.r - ga.r);
        });
      } else {
        Incompatible("coincident between " + a.describe() + " and " + b.describe());
      }
    }
  }

  void RequireCenter(const Ref& r) const {
    if (!r.is_circle() && !r.is_point()) Incompatible("concentric needs centers, got " + r.describe());
  }

  void Concentric(const std::vector<Pointer>& ptrs) {
    const Ref a = Resolve(ptrs[0]);
    RequireCenter(a);
    for (size_t k = 1; k < ptrs.size(); ++k) {
      const Ref b = Resolve(ptrs[k]);
      RequireCenter(b);
      Emit("concentric", 2, [a, b](const Theta& t, std::vector<double>* out) {
        const Vec2 d = Sub(AnchorAt(t, b), AnchorAt(t, a));
        out->push_back(d.x);
        out->push_back(d.y);
      });
    }
  }

  void Equal(const std::vector<Pointer>& ptrs) {
    const Ref a = Resolve(ptrs[0]);
    for (size_t k = 1; k < ptrs.size(); ++k) {
      const Ref b = Resolve(ptrs[k]);
      if (a.is_line() && b.is_line()) {
        Emit("equal", 1, [a, b](const Theta& t, std::vector<double>* out) {
          const Segment la = LineAt(t, a), lb = LineAt(t, b);
          out->push_back(Norm(Sub(lb.b, lb.a)) - Norm(Sub(la.b, la.a)));
        });
      } else if (a.is_circle() && b.is_circle()) {
        Emit("equal", 1, [a, b](const Theta& t, std::vector<double>* out) {
          out->push_back(CircleAt(t, b).r - CircleAt(t, a).r);
        });
      } else {
        Incompatible("equal between " + a.describe() + " and " + b.describe());
      }
    }
  }

  void Parallel(const std::vector<Pointer>& ptrs) {
    const Ref a = Resolve(ptrs[0]);
    RequireLine(a, "parallel");
    for (size_t k = 1; k < ptrs.size(); ++k) {
      const Ref b = Resolve(ptrs[k]);
      RequireLine(b, "parallel");
      Emit("parallel", 1, [a, b](const Theta& t, std::vector<double>* out) {
        const Segment la = LineAt(t, a), lb = LineAt(t, b);
        out->push_back(Cross(Unit(Sub(la.b, la.a)), Unit(Sub(lb.b, lb.a))));
      });
    }
  }

  void Perpendicular(Pointer p, Pointer q) {
    const Ref a = Resolve(p), b = Resolve(q);
    RequireLine(a, "perpendicular");
    RequireLine(b, "perpendicular");
    Emit("perpendicular", 1, [a, b](const Theta& t, std::vector<double>* out) {
      const Segment la = LineAt(t, a), lb = LineAt(t, b);
      out->push_back(Dot(Unit(Sub(la.b, la.a)), Unit(Sub(lb.b, lb.a))));
    });
  }

  void AxisAligned(const std::vector<Pointer>& ptrs, bool horizontal) {
    const char* label = horizontal ? "horizontal" : "vertical";
    std::vector<Ref> points;
    for (Pointer p : ptrs) {
      const Ref r = Resolve(p);
      if (r.is_line()) {
        Emit(label, 1, [r, horizontal](const Theta& t, std::vector<double>* out) {
          const Segment l = LineAt(t, r);
          out->push_back(horizontal ? l.b.y - l.a.y : l.b.x - l.a.x);
        });
      } else if (r.is_point()) {
        points.push_back(r);
      } else {
        Incompatible(std::string(label) + " on " + r.describe());
      }
    }
    for (size_t k = 1; k < points.size(); ++k) {
      const Ref a = points[0], b = points[k];
      Emit(label, 1, [a, b, horizontal](const Theta& t, std::vector<double>* out) {
        const Vec2 d = Sub(PointAt(t, b), PointAt(t, a));
        out->push_back(horizontal ? d.y : d.x);
      });
    }
  }

  void Tangent(Pointer p, Pointer q) {
    const Ref a = Resolve(p), b = Resolve(q);
    if ((a.is_line() && b.is_circle()) || (a.is_circle() && b.is_line())) {
      const Ref l = a.is_line() ? a : b;
      const Ref c = a.is_circle() ? a : b;
      Emit("tangent", 1, [l, c](const Theta& t, std::vector<double>* out) {
        const CircleGeom g = CircleAt(t, c);
        out->push_back(std::abs(SignedDistance(g.c, LineAt(t, l))) - g.r);
      });
    } else if (a.is_circle() && b.is_circle()) {
      const Theta& t0 = sys_->params;
      const CircleGeom ga = CircleAt(t0, a), gb = CircleAt(t0, b);
      const double d = Norm(Sub(gb.c, ga.c));
      const bool internal = std::abs(d - std::abs(ga.r - gb.r)) < std::abs(d - (ga.r + gb.r));
      Emit("tangent", 1, [a, b, internal](const Theta& t, std::vector<double>* out) {
        const CircleGeom ca = CircleAt(t, a), cb = CircleAt(t, b);
        const double dist = Norm(Sub(cb.c, ca.c));
        out->push_back(dist - (internal ? std::abs(ca.r - cb.r) : ca.r + cb.r));
      });
    } else {
      Incompatible("tangent between " + a.describe() + " and " + b.describe());
    }
  }

  void Distance(const DistanceConstraint& c) {
    const Ref a = Resolve(c.first), b = Resolve(c.second);
    const double target = c.length;
    if (c.direction != Direction::kMinimum) {
      const bool horizontal = c.direction == Direction::kHorizontal;
      const double sign =
          std::get<Alignment>(c.params) == Alignment::kAligned ? 1.0 : -1.0;
      AnchorAt(sys_->params, a);
      AnchorAt(sys_->params, b);
      Emit("distance", 1, [a, b, horizontal, sign, target](const Theta& t, std::vector<double>* out) {
        const Vec2 d = Sub(AnchorAt(t, b), AnchorAt(t, a));
        out->push_back((horizontal ? d.x : d.y) - sign * target);
      });
      return;
    }
    const HalfSpaceParams hs = std::get<HalfSpaceParams>(c.params);
    auto side = [](HalfSpace h) { return h == HalfSpace::kLeft ? 1.0 : h == HalfSpace::kRight ? -1.0 : 0.0; };
    if ((a.is_point() && b.is_line()) || (a.is_line() && b.is_point())) {
      const Ref p = a.is_point() ? a : b;
      const Ref l = a.is_line() ? a : b;
      const double s = side(a.is_point() ? hs.half_space_first : hs.half_space_second);
      Emit("distance", 1, [p, l, s, target](const Theta& t, std::vector<double>* out) {
        const double sd = SignedDistance(PointAt(t, p), LineAt(t, l));
        out->push_back((s == 0.0 ? std::abs(sd) : s * sd) - target);
      });
    } else if (a.is_line() && b.is_line()) {
      const double s = side(hs.half_space_second);
      Emit("distance", 1, [a, b, s, target](const Theta& t, std::vector<double>* out) {
        const Segment lb = LineAt(t, b);
        const double sd = SignedDistance(Scale(Add(lb.a, lb.b), 0.5), LineAt(t, a));
        out->push_back((s == 0.0 ? std::abs(sd) : s * sd) - target);
      });
    } else {
      AnchorAt(sys_->params, a);
      AnchorAt(sys_->params, b);
      Emit("distance", 1, [a, b, target](const Theta& t, std::vector<double>* out) {
        double d = Norm(Sub(AnchorAt(t, b), AnchorAt(t, a)));
        if (a.is_circle()) d -= CircleAt(t, a).r;
        if (b.is_circle()) d -= CircleAt(t, b).r;
        out->push_back(std::abs(d) - target);
      });
    }
  }

  void Measure(ConstraintKind kind, Pointer p, double target) {
    const Ref r = Resolve(p);
    if (kind == ConstraintKind::kLength) {
      RequireLine(r, "length");
      Emit("length", 1, [r, target](const Theta& t, std::vector<double>* out) {
        const Segment l = LineAt(t, r);
        out->push_back(Norm(Sub(l.b, l.a)) - target);
      });
      return;
    }
    RequireCircle(r, kind == ConstraintKind::kDiameter ? "diameter" : "radius");
    const double factor = kind == ConstraintKind::kDiameter ? 2.0 : 1.0;
    Emit(kind == ConstraintKind::kDiameter ? "diameter" : "radius", 1,
         [r, target, factor](const Theta& t, std::vector<double>* out) {
           out->push_back(factor * CircleAt(t, r).r - target);
         });
  }

  void Angle(const AngleConstraint& c) {
    const Ref a = Resolve(c.first), b = Resolve(c.second);
    RequireLine(a, "angle");
    RequireLine(b, "angle");
    const double target = c.angle;
    Emit("angle", 1, [a, b, target](const Theta& t, std::vector<double>* out) {
      const Segment la = LineAt(t, a), lb = LineAt(t, b);
      const Vec2 u = Sub(la.b, la.a), v = Sub(lb.b, lb.a);
      out->push_back(WrapAngle(std::atan2(Cross(u, v), Dot(u, v)) - target));
    });
  }

  void Midpoint(const MidpointConstraint& c) {
    const Ref m = Resolve(c.midpoint);
    if (!m.is_point()) Incompatible("midpoint needs a point, got " + m.describe());
    if (const auto* ends = std::get_if<MidpointEndpoints>(&c.params)) {
      const Ref a = Resolve(ends->first), b = Resolve(ends->second);
      if (!a.is_point() || !b.is_point()) Incompatible("midpoint endpoints must be points");
      Emit("midpoint", 2, [m, a, b](const Theta& t, std::vector<double>* out) {
        const Vec2 d = Sub(PointAt(t, m), Scale(Add(PointAt(t, a), PointAt(t, b)), 0.5));
        out->push_back(d.x);
        out->push_back(d.y);
      });
      return;
    }
    const Ref l = Resolve(std::get<MidpointEntityRef>(c.params).entity);
    RequireLine(l, "midpoint");
    Emit("midpoint", 2, [m, l](const Theta& t, std::vector<double>* out) {
      const Segment s = LineAt(t, l);
      const Vec2 d = Sub(PointAt(t, m), Scale(Add(s.a, s.b), 0.5));
      out->push_back(d.x);
      out->push_back(d.y);
    });
  }

  void Mirror(const MirrorConstraint& c) {
    const Ref axis = Resolve(c.mirror);
    RequireLine(axis, "mirror axis");
    for (const MirrorPair& pair : c.mirrored_pairs) {
      const Ref a = Resolve(pair.first), b = Resolve(pair.second);
      if (a.is_point() && b.is_point()) {
        Emit("mirror", 2, [axis, a, b](const Theta& t, std::vector<double>* out) {
          const Vec2 d = Sub(Reflect(PointAt(t, a), LineAt(t, axis)), PointAt(t, b));
          out->push_back(d.x);
          out->push_back(d.y);
        });
      } else if (a.is_line() && b.is_line()) {
        Emit("mirror", 4, [axis, a, b](const Theta& t, std::vector<double>* out) {
          const Segment m = LineAt(t, axis), la = LineAt(t, a), lb = LineAt(t, b);
          const Vec2 d0 = Sub(Reflect(la.a, m), lb.a), d1 = Sub(Reflect(la.b, m), lb.b);
          out->insert(out->end(), {d0.x, d0.y, d1.x, d1.y});
        });
      } else if (a.is_circle() && b.is_circle()) {
        Emit("mirror", 3, [axis, a, b](const Theta& t, std::vector<double>* out) {
          const CircleGeom ga = CircleAt(t, a), gb = CircleAt(t, b);
          const Vec2 d = Sub(Reflect(ga.c, LineAt(t, axis)), gb.c);
          out->insert(out->end(), {d.x, d.y, gb.r - ga.r});
        });
      } else {
        Incompatible("mirror pair " + a.describe() + " / " + b.describe());
      }
    }
  }

  void AddConstraint(const Constraint& c) {
    std::visit(
        [this](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, FixConstraint>) {
            for (Pointer p : k.entities) Freeze(Resolve(p));
          } else if constexpr (std::is_same_v<T, CoincidentConstraint>) {
            Coincident(k.entities);
          } else if constexpr (std::is_same_v<T, ConcentricConstraint>) {
            Concentric(k.entities);
          } else if constexpr (std::is_same_v<T, EqualConstraint>) {
            Equal(k.entities);
          } else if constexpr (std::is_same_v<T, ParallelConstraint>) {
            Parallel(k.entities);
          } else if constexpr (std::is_same_v<T, HorizontalConstraint>) {
            AxisAligned(k.entities, true);
          } else if constexpr (std::is_same_v<T, VerticalConstraint>) {
            AxisAligned(k.entities, false);
          } else if constexpr (std::is_same_v<T, TangentConstraint>) {
            Tangent(k.first, k.second);
          } else if constexpr (std::is_same_v<T, PerpendicularConstraint>) {
            Perpendicular(k.first, k.second);
          } else if constexpr (std::is_same_v<T, MirrorConstraint>) {
            Mirror(k);
          } else if constexpr (std::is_same_v<T, DistanceConstraint>) {
            Distance(k);
          } else if constexpr (std::is_same_v<T, AngleConstraint>) {
            Angle(k);
          } else if constexpr (std::is_same_v<T, MidpointConstraint>) {
            Midpoint(k);
          } else {
            Measure(T::kKind, k.entity, k.length);
          }
        },
        c);
  }

  ResidualSystem* sys_;
  std::vector<const Entity*> entities_;
  ReferrableTable table_;
  size_t object_index_ = 0;
};

double MaxAbs(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

double SquaredNorm(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

}  // namespace

std::vector<double> ResidualSystem::Evaluate(const std::vector<double>& theta) const {
  std::vector<double> out;
  for (const auto& b : blocks) b(theta, &out);
  return out;
}

Sketch ResidualSystem::Apply(const std::vector<double>& theta) const {
  Sketch out = sketch;
  size_t k = 0;
  for (Object& o : out.objects) {
    if (!IsEntity(o)) continue;
    Unpack(theta.data() + entity_offset[k++], &std::get<Entity>(o));
  }
  return out;
}

ResidualSystem ConstraintResiduals(const Sketch& s) {
  ResidualSystem sys;
  sys.sketch = s;
  Builder(&sys).Run();
  return sys;
}

SolveResult Solve(const Sketch& s, double tol, int max_iter) {
  SolveResult result;
  ResidualSystem sys;
  try {
    sys = ConstraintResiduals(s);
  } catch (const GeometryError& e) {
    result.sketch = s;
    result.report.max_residual = result.report.initial_max_residual =
        std::numeric_limits<double>::infinity();
    result.report.error = e.what();
    return result;
  }
  std::vector<double> theta = sys.params;
  std::vector<double> r = sys.Evaluate(theta);
  result.report.num_residuals = static_cast<int>(r.size());
  result.report.initial_max_residual = MaxAbs(r);
  std::vector<size_t> free;
  for (size_t i = 0; i < theta.size(); ++i) {
    if (!sys.frozen[i]) free.push_back(i);
  }
  double cost = SquaredNorm(r);
  double lambda = 1e-3;
  int iter = 0;
  while (MaxAbs(r) >= tol && iter < max_iter && !free.empty()) {
    ++iter;
    const Eigen::Index m = static_cast<Eigen::Index>(r.size());
    const Eigen::Index n = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd jac(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const size_t i = free[j];
      const double keep = theta[i];
      const double h = 1e-8 * std::max(1.0, std::abs(keep));
      theta[i] = keep + h;
      const std::vector<double> rp = sys.Evaluate(theta);
      theta[i] = keep;
      for (Eigen::Index k = 0; k < m; ++k) jac(k, j) = (rp[k] - r[k]) / h;
    }
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), m);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * rv;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index j = 0; j < n; ++j) damped(j, j) += lambda * std::max(a(j, j), 1e-9);
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      std::vector<double> trial = theta;
      for (Eigen::Index j = 0; j < n; ++j) trial[free[j]] += step(j);
      std::vector<double> rt = sys.Evaluate(trial);
      const double trial_cost = SquaredNorm(rt);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        theta = std::move(trial);
        r = std::move(rt);
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  result.report.iterations = iter;
  result.report.max_residual = MaxAbs(r);
  result.report.half_squared_norm = 0.5 * cost;
  result.report.converged = result.report.max_residual < tol;
  result.sketch = iter == 0 ? s : sys.Apply(theta);
  return result;
}

// ------------------------------------------------------------------------------ sampling

namespace {

std::vector<Vec2> SampleArc(Vec2 c, Vec2 s, Vec2 e, bool clockwise, double max_step) {
  const double r0 = Norm(Sub(s, c)), r1 = Norm(Sub(e, c));
  const double a0 = std::atan2(s.y - c.y, s.x - c.x);
  const double a1 = std::atan2(e.y - c.y, e.x - c.x);
  double sweep = a1 - a0;
  if (clockwise) {
    while (sweep >= 0.0) sweep -= 2.0 * kPi;
  } else {
    while (sweep <= 0.0) sweep += 2.0 * kPi;
  }
  const double length = std::abs(sweep) * std::max(r0, r1);
  const int n = std::clamp(static_cast<int>(std::ceil(length / max_step)), 1, 1 << 20);
  std::vector<Vec2> pts;
  pts.reserve(n + 1);
  pts.push_back(s);
  for (int i = 1; i < n; ++i) {
    const double u = static_cast<double>(i) / n;
    const double a = a0 + u * sweep;
    const double r = r0 + u * (r1 - r0);
    pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  pts.push_back(e);
  return pts;
}

struct Hermite {
  Vec2 p0, p1, t0, t1;
  Vec2 At(double u) const {
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    return {h00 * p0.x + h10 * t0.x + h01 * p1.x + h11 * t1.x,
            h00 * p0.y + h10 * t0.y + h01 * p1.y + h11 * t1.y};
  }
  double BoundLength() const {
    const Vec2 b1 = Add(p0, Scale(t0, 1.0 / 3.0)), b2 = Sub(p1, Scale(t1, 1.0 / 3.0));
    return Norm(Sub(b1, p0)) + Norm(Sub(b2, b1)) + Norm(Sub(p1, b2));
  }
};

std::vector<Hermite> SplineSegments(const InterpolatedSplineEntity& sp) {
  const auto& p = sp.interp_points;
  const size_t n = p.size();
  std::vector<Hermite> segs;
  if (n < 2) return segs;
  std::vector<Vec2> tan(n);
  for (size_t i = 0; i < n; ++i) {
    if (sp.is_periodic) {
      tan[i] = Scale(Sub(p[(i + 1) % n], p[(i + n - 1) % n]), 0.5);
    } else if (i == 0) {
      tan[i] = sp.start_derivative;
    } else if (i + 1 == n) {
      tan[i] = sp.end_derivative;
    } else {
      tan[i] = Scale(Sub(p[i + 1], p[i - 1]), 0.5);
    }
  }
  const size_t count = sp.is_periodic ? n : n - 1;
  for (size_t i = 0; i < count; ++i) {
    const size_t j = (i + 1) % n;
    segs.push_back({p[i], p[j], tan[i], tan[j]});
  }
  return segs;
}

std::vector<Vec2> SampleSpline(const InterpolatedSplineEntity& sp, double max_step) {
  const std::vector<Hermite> segs = SplineSegments(sp);
  if (segs.empty()) return {sp.interp_points.begin(), sp.interp_points.end()};
  double lo = 0.0, hi = static_cast<double>(segs.size());
  if (const auto* t = std::get_if<TrimmedParams>(&sp.params)) {
    lo = std::clamp(std::min(t->start_phi, t->end_phi), 0.0, hi);
    hi = std::clamp(std::max(t->start_phi, t->end_phi), 0.0, hi);
  }
  std::vector<Vec2> pts;
  auto at = [&](double u) {
    const size_t k = std::min(static_cast<size_t>(u), segs.size() - 1);
    return segs[k].At(u - static_cast<double>(k));
  };
  pts.push_back(at(lo));
  for (size_t k = static_cast<size_t>(lo); k < segs.size() && static_cast<double>(k) < hi; ++k) {
    const double a = std::max(lo, static_cast<double>(k));
    const double b = std::min(hi, static_cast<double>(k + 1));
    const int n = std::clamp(
        static_cast<int>(std::ceil(segs[k].BoundLength() * (b - a) / max_step)), 1, 1 << 18);
    for (int i = 1; i <= n; ++i) pts.push_back(at(a + (b - a) * i / n));
  }
  return pts;
}

/*! Parametric form of an arc or spline over [lo, hi]. */
struct Curve {
  std::function<Vec2(double)> at;
  double lo = 0.0;
  double hi = 1.0;
  int pieces = 1;
};

std::optional<Curve> CurveOf(const Entity& e) {
  if (const auto* c = std::get_if<CircleArcEntity>(&e)) {
    const auto* arc = std::get_if<ArcParams>(&c->params);
    if (arc == nullptr) return std::nullopt;
    const Vec2 center = c->center, s = arc->start, e1 = arc->end;
    const double r0 = Norm(Sub(s, center)), r1 = Norm(Sub(e1, center));
    const double a0 = std::atan2(s.y - center.y, s.x - center.x);
    const double a1 = std::atan2(e1.y - center.y, e1.x - center.x);
    double sweep = a1 - a0;
    if (arc->is_clockwise) {
      while (sweep >= 0.0) sweep -= 2.0 * kPi;
    } else {
      while (sweep <= 0.0) sweep += 2.0 * kPi;
    }
    Curve curve;
    curve.pieces = 4;
    curve.at = [=](double u) -> Vec2 {
      if (u <= 0.0) return s;
      if (u >= 1.0) return e1;
      const double a = a0 + u * sweep, r = r0 + u * (r1 - r0);
      return {center.x + r * std::cos(a), center.y + r * std::sin(a)};
    };
    return curve;
  }
  if (const auto* sp = std::get_if<InterpolatedSplineEntity>(&e)) {
    std::vector<Hermite> segs = SplineSegments(*sp);
    if (segs.empty()) return std::nullopt;
    Curve curve;
    curve.hi = static_cast<double>(segs.size());
    if (const auto* t = std::get_if<TrimmedParams>(&sp->params)) {
      const double n = curve.hi;
      curve.lo = std::clamp(std::min(t->start_phi, t->end_phi), 0.0, n);
      curve.hi = std::clamp(std::max(t->start_phi, t->end_phi), 0.0, n);
    }
    curve.pieces = static_cast<int>(segs.size());
    curve.at = [segs = std::move(segs)](double u) {
      const size_t k = std::min(static_cast<size_t>(std::max(u, 0.0)), segs.size() - 1);
      return segs[k].At(u - static_cast<double>(k));
    };
    return curve;
  }
  return std::nullopt;
}

/*! Extends `grow` with the curve's endpoints and its coordinate extremes, refined to machine
 * precision by golden-section search around each sampled local extreme. */
template <typename Grow>
void CurveExtremes(const Curve& c, Grow&& grow) {
  const int n = 64 * c.pieces;
  std::vector<double> us(n + 1);
  std::vector<Vec2> ps(n + 1);
  for (int i = 0; i <= n; ++i) {
    us[i] = c.lo + (c.hi - c.lo) * i / n;
    ps[i] = c.at(us[i]);
  }
  grow(ps.front());
  grow(ps.back());
  for (int axis = 0; axis < 2; ++axis) {
    auto coord = [&](double u) {
      const Vec2 p = c.at(u);
      return axis == 0 ? p.x : p.y;
    };
    for (int sign = -1; sign <= 1; sign += 2) {
      auto f = [&](double u) { return sign * coord(u); };
      for (int i = 1; i < n; ++i) {
        const double fi = sign * (axis == 0 ? ps[i].x : ps[i].y);
        const double fa = sign * (axis == 0 ? ps[i - 1].x : ps[i - 1].y);
        const double fb = sign * (axis == 0 ? ps[i + 1].x : ps[i + 1].y);
        if (fi < fa || fi < fb) continue;
        double a = us[i - 1], b = us[i + 1];
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
          const double x1 = b - g * (b - a), x2 = a + g * (b - a);
          if (f(x1) < f(x2)) {
            a = x1;
          } else {
            b = x2;
          }
        }
        grow(c.at(0.5 * (a + b)));
        grow(ps[i]);
      }
    }
  }
}

}  // namespace

std::vector<Vec2> SampleEntity(const Entity& e, double max_step) {
  return std::visit(
      [max_step](const auto& v) -> std::vector<Vec2> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LineEntity>) {
          return {v.start, v.end};
        } else if constexpr (std::is_same_v<T, PointEntity>) {
          return {v.point};
        } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
          if (const auto* arc = std::get_if<ArcParams>(&v.params)) {
            return SampleArc(v.center, arc->start, arc->end, arc->is_clockwise, max_step);
          }
          const double r = std::get<CircleParams>(v.params).radius;
          const int q = std::clamp(static_cast<int>(std::ceil(kPi * r / (2.0 * max_step))), 2,
                                   1 << 18);
          std::vector<Vec2> quarter(q);
          for (int i = 0; i < q; ++i) {
            const double a = kPi / 2.0 * (i + 0.5) / q;
            quarter[i] = {r * std::cos(a), r * std::sin(a)};
          }
          std::vector<Vec2> pts;
          pts.reserve(4 * q + 1);
          const Vec2 c = v.center;
          for (int i = 0; i < q; ++i) pts.push_back({c.x + quarter[i].x, c.y + quarter[i].y});
          for (int i = q - 1; i >= 0; --i) pts.push_back({c.x - quarter[i].x, c.y + quarter[i].y});
          for (int i = 0; i < q; ++i) pts.push_back({c.x - quarter[i].x, c.y - quarter[i].y});
          for (int i = q - 1; i >= 0; --i) pts.push_back({c.x + quarter[i].x, c.y - quarter[i].y});
          pts.push_back(pts.front());
          return pts;
        } else {
          return SampleSpline(v, max_step);
        }
      },
      e);
}

// -------------------------------------------------------------------------------- raster

size_t Bitmap::count() const {
  return static_cast<size_t>(std::count_if(pixels.begin(), pixels.end(), [](uint8_t p) { return p != 0; }));
}

namespace {

int PixelOf(double v, int size) {
  if (v == 1.0) return size - 1;
  const double w = (v + 1.0) / 2.0 * size;
  if (!(w > -1e9 && w < 1e9)) return w > 0 ? size + 1 : -2;
  return static_cast<int>(std::floor(w));
}

void Plot(Bitmap* b, int x, int y) {
  if (x >= 0 && y >= 0 && x < b->width && y < b->height) b->at(x, y) = 1;
}

void DrawSegment(Bitmap* b, int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  const int64_t limit = static_cast<int64_t>(dx) - dy + 1;
  for (int64_t i = 0; i <= limit; ++i) {
    Plot(b, x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Bitmap Render(const Sketch& s, int resolution) {
  if (resolution <= 0) throw std::invalid_argument("resolution must be positive");
  Bitmap b(resolution, resolution);
  const double step = 1.0 / resolution;  // half a pixel in sketch units
  for (const Object& o : s.objects) {
    if (!IsEntity(o) || IsConstruction(AsEntity(o))) continue;
    const std::vector<Vec2> pts = SampleEntity(AsEntity(o), step);
    if (pts.size() == 1) {
      Plot(&b, PixelOf(pts[0].x, resolution), PixelOf(pts[0].y, resolution));
      continue;
    }
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      DrawSegment(&b, PixelOf(pts[i].x, resolution), PixelOf(pts[i].y, resolution),
                  PixelOf(pts[i + 1].x, resolution), PixelOf(pts[i + 1].y, resolution));
    }
  }
  return b;
}

std::string RenderSvg(const Sketch& s, int size) {
  if (size <= 0) throw std::invalid_argument("size must be positive");
  std::ostringstream os;
  os.precision(6);
  auto px = [size](double v) { return (v + 1.0) / 2.0 * size; };
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << size
     << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const Object& o : s.objects) {
    if (!IsEntity(o)) continue;
    const Entity& e = AsEntity(o);
    const std::string style = IsConstruction(e)
                                  ? " fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\""
                                  : " fill=\"none\" stroke=\"black\"";
    if (const auto* p = std::get_if<PointEntity>(&e)) {
      os << "<circle cx=\"" << px(p->point.x) << "\" cy=\"" << px(p->point.y)
         << "\" r=\"1.5\" fill=\"" << (p->is_construction ? "gray" : "black") << "\"/>\n";
      continue;
    }
    if (const auto* c = std::get_if<CircleArcEntity>(&e); c && !c->is_arc()) {
      os << "<circle cx=\"" << px(c->center.x) << "\" cy=\"" << px(c->center.y) << "\" r=\""
         << std::get<CircleParams>(c->params).radius * size / 2.0 << '"' << style << "/>\n";
      continue;
    }
    os << "<polyline points=\"";
    for (const Vec2& q : SampleEntity(e, 2.0 / size)) os << px(q.x) << ',' << px(q.y) << ' ';
    os << '"' << style << "/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void WritePgm(std::ostream& os, const Bitmap& b) {
  os << "P5\n" << b.width << ' ' << b.height << "\n255\n";
  for (uint8_t p : b.pixels) os.put(static_cast<char>(p ? 255 : 0));
}

Bitmap ReadPgm(std::istream& is) {
  auto token = [&is]() {
    std::string t;
    char c;
    while (is.get(c)) {
      if (c == '#') {
        std::string line;
        std::getline(is, line);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    if (t.empty()) throw std::runtime_error("truncated PGM header");
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw std::runtime_error("not a PGM file");
  const int w = std::stoi(token()), h = std::stoi(token()), maxval = std::stoi(token());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw std::runtime_error("bad PGM header");
  Bitmap b(w, h);
  for (size_t i = 0; i < b.pixels.size(); ++i) {
    int v;
    if (magic == "P2") {
      v = std::stoi(token());
    } else if (maxval < 256) {
      const int c = is.get();
      if (c == EOF) throw std::runtime_error("truncated PGM data");
      v = c;
    } else {
      const int hi = is.get(), lo = is.get();
      if (lo == EOF) throw std::runtime_error("truncated PGM data");
      v = hi * 256 + lo;
    }
    b.pixels[i] = 2 * v > maxval ? 1 : 0;
  }
  return b;
}

int CountClosedRegions(const Bitmap& b) {
  std::vector<int> label(b.pixels.size(), 0);
  std::vector<std::pair<int, int>> stack;
  auto fill = [&](int sx, int sy, int id) {
    stack.push_back({sx, sy});
    label[static_cast<size_t>(sy) * b.width + sx] = id;
    while (!stack.empty()) {
      const auto [x, y] = stack.back();
      stack.pop_back();
      const int nx[4] = {x + 1, x - 1, x, x};
      const int ny[4] = {y, y, y + 1, y - 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= b.width || ny[k] >= b.height) continue;
        const size_t idx = static_cast<size_t>(ny[k]) * b.width + nx[k];
        if (label[idx] != 0 || b.pixels[idx] != 0) continue;
        label[idx] = id;
        stack.push_back({nx[k], ny[k]});
      }
    }
  };
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const bool border = x == 0 || y == 0 || x == b.width - 1 || y == b.height - 1;
      const size_t idx = static_cast<size_t>(y) * b.width + x;
      if (border && b.pixels[idx] == 0 && label[idx] == 0) fill(x, y, -1);
    }
  }
  int regions = 0;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const size_t idx = static_cast<size_t>(y) * b.width + x;
      if (b.pixels[idx] == 0 && label[idx] == 0) fill(x, y, ++regions);
    }
  }
  return regions;
}

double JaccardDistance(const Bitmap& a, const Bitmap& b) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("bitmap sizes differ");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const bool pa = a.pixels[i] != 0, pb = b.pixels[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> GaussianSmooth(const Bitmap& b, double sigma) {
  std::vector<double> img(b.pixels.begin(), b.pixels.end());
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& w : kernel) w /= total;
  std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
  const int w = b.width, h = b.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < w) s += kernel[k + radius] * img[static_cast<size_t>(y) * w + xx];
      }
      tmp[static_cast<size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < h) s += kernel[k + radius] * tmp[static_cast<size_t>(yy) * w + x];
      }
      out[static_cast<size_t>(y) * w + x] = s;
    }
  }
  return out;
}

double SmoothedL2(const Bitmap& a, const Bitmap& b, double sigma) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("bitmap sizes differ");
  const std::vector<double> sa = GaussianSmooth(a, sigma), sb = GaussianSmooth(b, sigma);
  double s = 0.0;
  for (size_t i = 0; i < sa.size(); ++i) s += (sa[i] - sb[i]) * (sa[i] - sb[i]);
  return std::sqrt(s);
}

// ----------------------------------------------------------------------------- normalize

BoundingBox GeometryBounds(const Sketch& s, bool include_construction) {
  BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  bool any = false;
  auto grow = [&](Vec2 p) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
    any = true;
  };
  for (const Object& o : s.objects) {
    if (!IsEntity(o) || (!include_construction && IsConstruction(AsEntity(o)))) continue;
    const Entity& e = AsEntity(o);
    if (const auto* c = std::get_if<CircleArcEntity>(&e); c && !c->is_arc()) {
      const double r = std::abs(std::get<CircleParams>(c->params).radius);
      grow({c->center.x - r, c->center.y - r});
      grow({c->center.x + r, c->center.y + r});
      continue;
    }
    if (const auto curve = CurveOf(e)) {
      CurveExtremes(*curve, grow);
      continue;
    }
    for (const Vec2& p : SampleEntity(e, 1.0)) grow(p);
  }
  if (!any) throw GeometryError("sketch has no non-construction geometry");
  return box;
}

Sketch Normalize(const Sketch& s) {
  auto extent_of = [](const BoundingBox& b) { return std::max(b.max_x - b.min_x, b.max_y - b.min_y); };
  BoundingBox box;
  double extent = 0.0;
  try {
    box = GeometryBounds(s);
    extent = extent_of(box);
  } catch (const GeometryError&) {
  }
  if (!(extent > 0.0)) {
    box = GeometryBounds(s, true);
    extent = extent_of(box);
  }
  if (!(extent > 0.0) || !std::isfinite(extent)) throw GeometryError("degenerate bounding box");
  const double scale = 2.0 / extent;
  const Vec2 center{(box.min_x + box.max_x) / 2.0, (box.min_y + box.max_y) / 2.0};
  auto map = [&](Vec2& p) { p = Scale(Sub(p, center), scale); };
  Sketch out = s;
  for (Object& o : out.objects) {
    if (IsEntity(o)) {
      std::visit(
          [&](auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineEntity>) {
              map(v.start);
              map(v.end);
            } else if constexpr (std::is_same_v<T, PointEntity>) {
              map(v.point);
            } else if constexpr (std::is_same_v<T, CircleArcEntity>) {
              map(v.center);
              if (auto* arc = std::get_if<ArcParams>(&v.params)) {
                map(arc->start);
                map(arc->end);
              } else {
                std::get<CircleParams>(v.params).radius *= scale;
              }
            } else {
              for (Vec2& p : v.interp_points) map(p);
              v.start_derivative = Scale(v.start_derivative, scale);
              v.end_derivative = Scale(v.end_derivative, scale);
            }
          },
          std::get<Entity>(o));
      continue;
    }
    std::visit(
        [scale](auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, DistanceConstraint> || std::is_same_v<T, LengthConstraint> ||
                        std::is_same_v<T, DiameterConstraint> || std::is_same_v<T, RadiusConstraint>) {
            k.length *= scale;
          }
        },
        std::get<Constraint>(o));
  }
  return out;
}

}  // namespace sketchgen
