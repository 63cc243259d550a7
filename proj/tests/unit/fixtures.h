/*!
 * \file tests/unit/fixtures.h
 * \brief Small hand-built sketches shared by the unit tests.
 */
#ifndef SKETCHGEN_TESTS_FIXTURES_H_
#define SKETCHGEN_TESTS_FIXTURES_H_

#include "sketchgen/sketch.h"

namespace sketchgen::testing {

/*! A construction line (0,0.1)->(-0.5,0.2) and a point at (0,0.1). */
inline Sketch LinePointSketch() {
  Sketch s;
  s.objects.push_back(Entity{LineEntity{true, {0.0, 0.1}, {-0.5, 0.2}}});
  s.objects.push_back(Entity{PointEntity{false, {0.0, 0.1}}});
  return s;
}

inline Entity Line(double x0, double y0, double x1, double y1, bool construction = false) {
  return LineEntity{construction, {x0, y0}, {x1, y1}};
}

inline Entity Circle(double cx, double cy, double r) {
  return CircleArcEntity{false, {cx, cy}, CircleParams{r}};
}

/*! Four lines forming the square [lo,hi]^2, counter-clockwise from (lo,lo). */
inline Sketch Square(double lo, double hi) {
  Sketch s;
  s.objects.push_back(Line(lo, lo, hi, lo));
  s.objects.push_back(Line(hi, lo, hi, hi));
  s.objects.push_back(Line(hi, hi, lo, hi));
  s.objects.push_back(Line(lo, hi, lo, lo));
  return s;
}

/*!
 * Square plus 4 corner coincidences and horizontal/vertical constraints. Line i has referrable
 * entries 3i (whole), 3i+1 (start), 3i+2 (end).
 */
inline Sketch ConstrainedSquare(double lo, double hi) {
  Sketch s = Square(lo, hi);
  for (Pointer i = 0; i < 4; ++i) {
    const Pointer next = (i + 1) % 4;
    s.objects.push_back(Constraint{CoincidentConstraint{{3 * i + 2, 3 * next + 1}}});
  }
  s.objects.push_back(Constraint{HorizontalConstraint{{0}}});
  s.objects.push_back(Constraint{HorizontalConstraint{{6}}});
  s.objects.push_back(Constraint{VerticalConstraint{{3}}});
  s.objects.push_back(Constraint{VerticalConstraint{{9}}});
  return s;
}

}  // namespace sketchgen::testing

#endif  // SKETCHGEN_TESTS_FIXTURES_H_
