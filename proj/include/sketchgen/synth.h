/*!
 * \file sketchgen/synth.h
 * \brief Seeded random generators of valid sketches, used for fuzzing, fixtures and demos.
 */
#ifndef SKETCHGEN_SYNTH_H_
#define SKETCHGEN_SYNTH_H_

#include <random>

#include "sketchgen/sketch.h"

namespace sketchgen {

struct RandomSketchOptions {
  int min_entities = 1;
  int max_entities = 8;
  /*! Expected number of constraints emitted after each entity (geometric). */
  double constraints_per_entity = 0.7;
  /*! Snap every continuous value to a bin center of its token group. */
  bool quantized = false;
  int max_spline_points = 5;
  /*! Upper bound on repeated pointer lists and mirror pairs. */
  int max_list = 4;
};

/*! A structurally valid sketch in interleaved order (pointers index the prefix table). */
Sketch RandomSketch(std::mt19937_64& rng, const RandomSketchOptions& options = {});

}  // namespace sketchgen

#endif  // SKETCHGEN_SYNTH_H_
