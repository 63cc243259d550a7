/*!
 * \file sketchgen/generator.h
 * \brief Nucleus sampling, interpreter-guided generation for triplet models, unconstrained byte
 * generation, and image-guided search over sampled object prefixes.
 */
#ifndef SKETCHGEN_GENERATOR_H_
#define SKETCHGEN_GENERATOR_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchgen/geometry.h"
#include "sketchgen/model.h"
#include "sketchgen/sketch.h"
#include "sketchgen/triplet.h"

namespace sketchgen {

/*!
 * Smallest probability-sorted support whose mass reaches `top_p`, renormalized. Entries tied with
 * the last one kept are kept too; zero-probability entries never are. Throws on top_p outside (0, 1].
 */
std::vector<double> NucleusProbs(const std::vector<double>& probs, double top_p);

/*! Draws an index from unnormalized non-negative weights. */
int SampleIndex(const std::vector<double>& weights, std::mt19937_64& rng);

struct SampleOptions {
  double top_p = 0.9;
  /*! Budget of predicted tokens (bytes for byte models). */
  int max_tokens = 1024;
  uint64_t seed = 0;
  /*! Row-major intensities for conditional models. */
  const std::vector<double>* image = nullptr;
  /*! Masks the end of the object list so generation runs to the token budget. */
  bool suppress_end = false;
};

struct SampleResult {
  /*! Full sketch, or the completed objects when truncated or unparsable. */
  Sketch sketch;
  bool truncated = false;
  /*! False when a byte sample fails to parse. */
  bool valid = true;
  std::string error;
  /*! Predicted triplets (triplet models). */
  std::vector<Triplet> triplets;
  /*! Sampled bytes without EOS (byte models). */
  std::vector<uint8_t> bytes;
  /*! Predicted-token count at each object boundary, one entry per completed object. */
  std::vector<int> object_ends;
};

/*! One sample; reproducible given the seed and the model parameters. */
SampleResult Sample(const Model& model, const SampleOptions& options);

struct GuidedSearchOptions {
  int n_samples = 64;
  int max_tokens = 1024;
  double sigma = 4.0;
  double top_p = 1.0;
  uint64_t seed = 0;
};

struct GuidedSearchResult {
  Sketch sketch;
  double smoothed_l2 = 0.0;
  /*! Sample and object count of the chosen prefix. */
  int sample_index = 0;
  int num_objects = 0;
  int num_tokens = 0;
};

/*! Intensities of a bitmap as a conditioning image. */
std::vector<double> ImageFromBitmap(const Bitmap& b);
/*! Pixels above one half. */
Bitmap BitmapFromImage(const std::vector<double>& image, int size);

/*! Training examples for `config`; conditional models get the render of each sketch as image. */
std::vector<Example> BuildExamples(const std::vector<Sketch>& corpus, const ModelConfig& config);

/*!
 * Samples `n_samples` conditional traces with the object-list end masked, scores every
 * object-aligned prefix (the empty one included) by the smoothed L2 distance between its render and
 * `target`, and returns the longest prefix among the minimizers (fewer tokens on ties).
 */
GuidedSearchResult GuidedSearch(const Model& model, const Bitmap& target,
                                const GuidedSearchOptions& options);

}  // namespace sketchgen

#endif  // SKETCHGEN_GENERATOR_H_
