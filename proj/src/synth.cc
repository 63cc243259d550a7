/*!
 * \file sketchgen/synth.cc
 */
#include "sketchgen/synth.h"

#include <algorithm>

#include "sketchgen/tokens.h"

namespace sketchgen {

namespace {

class Draw {
 public:
  Draw(std::mt19937_64& rng, const RandomSketchOptions& opt) : rng_(rng), opt_(opt) {}

  int Int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool Coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  double In(const char* group) {
    const TokenGroup& g = TokenGroups()[GroupIndex(group)];
    if (opt_.quantized) return Dequantize(Int(0, kNumBins - 1), g);
    return std::uniform_real_distribution<double>(g.lo, g.hi)(rng_);
  }
  Vec2 Point() { return {In("coordinate"), In("coordinate")}; }

  Entity RandomEntity() {
    switch (Int(0, 3)) {
      case 0:
        return LineEntity{Coin(0.2), Point(), Point()};
      case 1:
        return PointEntity{Coin(0.2), Point()};
      case 2: {
        CircleArcEntity c{Coin(0.2), Point(), CircleParams{In("radius")}};
        if (Coin()) c.params = ArcParams{Point(), Point(), Coin()};
        return c;
      }
      default: {
        InterpolatedSplineEntity s;
        s.is_construction = Coin(0.2);
        s.is_periodic = Coin(0.2);
        const int n = Int(2, std::max(2, opt_.max_spline_points));
        for (int i = 0; i < n; ++i) s.interp_points.push_back(Point());
        s.start_derivative = {In("derivative"), In("derivative")};
        s.end_derivative = {In("derivative"), In("derivative")};
        if (Coin()) s.params = TrimmedParams{In("phi"), In("phi")};
        return s;
      }
    }
  }

  Constraint RandomConstraint(Pointer table) {
    auto ptr = [&] { return static_cast<Pointer>(Int(0, static_cast<int>(table) - 1)); };
    auto list = [&](int at_least) {
      std::vector<Pointer> v(Int(at_least, std::max(at_least, opt_.max_list)));
      for (auto& p : v) p = ptr();
      return v;
    };
    switch (static_cast<ConstraintKind>(Int(0, kNumConstraintKinds - 1))) {
      case ConstraintKind::kFix:
        return FixConstraint{list(1)};
      case ConstraintKind::kCoincident:
        return CoincidentConstraint{list(2)};
      case ConstraintKind::kConcentric:
        return ConcentricConstraint{list(2)};
      case ConstraintKind::kEqual:
        return EqualConstraint{list(2)};
      case ConstraintKind::kParallel:
        return ParallelConstraint{list(2)};
      case ConstraintKind::kTangent:
        return TangentConstraint{ptr(), ptr()};
      case ConstraintKind::kPerpendicular:
        return PerpendicularConstraint{ptr(), ptr()};
      case ConstraintKind::kMirror: {
        MirrorConstraint m{ptr(), {}};
        const int n = Int(1, std::max(1, opt_.max_list));
        for (int i = 0; i < n; ++i) m.mirrored_pairs.push_back({ptr(), ptr()});
        return m;
      }
      case ConstraintKind::kDistance: {
        DistanceConstraint d{ptr(), ptr(), static_cast<Direction>(Int(0, 2)), In("length"),
                             Alignment::kAligned};
        if (d.direction == Direction::kMinimum) {
          d.params = HalfSpaceParams{static_cast<HalfSpace>(Int(0, 2)),
                                     static_cast<HalfSpace>(Int(0, 2))};
        } else {
          d.params = static_cast<Alignment>(Int(0, 1));
        }
        return d;
      }
      case ConstraintKind::kLength:
        return LengthConstraint{ptr(), In("length")};
      case ConstraintKind::kDiameter:
        return DiameterConstraint{ptr(), In("length")};
      case ConstraintKind::kRadius:
        return RadiusConstraint{ptr(), In("length")};
      case ConstraintKind::kAngle:
        return AngleConstraint{ptr(), ptr(), In("angle")};
      case ConstraintKind::kHorizontal:
        return HorizontalConstraint{list(1)};
      case ConstraintKind::kVertical:
        return VerticalConstraint{list(1)};
      case ConstraintKind::kMidpoint:
        if (Coin()) return MidpointConstraint{ptr(), MidpointEndpoints{ptr(), ptr()}};
        return MidpointConstraint{ptr(), MidpointEntityRef{ptr()}};
    }
    return FixConstraint{{0}};
  }

 private:
  std::mt19937_64& rng_;
  const RandomSketchOptions& opt_;
};

}  // namespace

Sketch RandomSketch(std::mt19937_64& rng, const RandomSketchOptions& options) {
  Draw draw(rng, options);
  Sketch s;
  const int entities = draw.Int(options.min_entities, std::max(options.min_entities,
                                                                options.max_entities));
  const double p_more = options.constraints_per_entity / (1.0 + options.constraints_per_entity);
  Pointer table = 0;
  for (int e = 0; e < entities; ++e) {
    Entity ent = draw.RandomEntity();
    table += static_cast<Pointer>(ReferrableParts(ent).size());
    s.objects.push_back(std::move(ent));
    while (draw.Coin(p_more)) {
      s.objects.push_back(draw.RandomConstraint(std::min<Pointer>(table, kMaxPointerVocabulary)));
    }
  }
  return s;
}

}  // namespace sketchgen
