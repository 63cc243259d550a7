#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.h"
#include "fixtures.h"
#include "sketchgen/generator.h"
#include "sketchgen/synth.h"
#include "sketchgen/wire.h"

namespace sketchgen {

namespace {

ModelConfig Small(Representation r, bool image = false) {
  ModelConfig c;
  c.representation = r;
  c.d_model = 16;
  c.num_blocks = 1;
  c.num_heads = 2;
  c.dropout = 0.0;
  c.max_positions = 1024;
  c.max_objects = 64;
  c.max_relative = 64;
  c.init_seed = 5;
  if (image) {
    c.image.enabled = true;
    c.image.image_size = 16;
    c.image.patch_size = 8;
  }
  return c;
}

}  // namespace

TEST_CASE("nucleus: (0.5, 0.3, 0.2) at 0.7") {
  const auto p = NucleusProbs({0.5, 0.3, 0.2}, 0.7);
  CHECK(p[0] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(p[2] == 0.0);
}

TEST_CASE("nucleus: ties at the cut, top_p = 1, zero mass, bad top_p") {
  const auto t = NucleusProbs({0.4, 0.2, 0.2, 0.2}, 0.5);
  for (size_t i = 1; i < 4; ++i) CHECK(t[i] == doctest::Approx(0.2));
  const auto s = NucleusProbs({0.1, 0.5, 0.1, 0.3}, 0.8);
  CHECK(s[1] == doctest::Approx(0.625));
  CHECK(s[0] == 0.0);
  const std::vector<double> q{0.1, 0.0, 0.6, 0.3};
  const auto full = NucleusProbs(q, 1.0);
  for (size_t i = 0; i < q.size(); ++i) CHECK(full[i] == doctest::Approx(q[i]));
  CHECK_THROWS(NucleusProbs(q, 0.0));
  CHECK_THROWS(NucleusProbs(q, 1.5));
  CHECK_THROWS(NucleusProbs({0.0, 0.0}, 0.9));
}

TEST_CASE("nucleus: support is monotone in top_p") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(12);
    for (double& v : p) v = std::floor(u(rng) * 5.0);
    p[0] += 1.0;
    const double a = u(rng), b = u(rng);
    const auto lo = NucleusProbs(p, std::max(1e-9, std::min(a, b)));
    const auto hi = NucleusProbs(p, std::max(a, b) > 0 ? std::max(a, b) : 1.0);
    for (size_t i = 0; i < p.size(); ++i) CHECK((lo[i] == 0.0 || hi[i] > 0.0));
  }
}

TEST_CASE("sample index matches weights") {
  std::mt19937_64 rng(4);
  const std::vector<double> w{1.0, 0.0, 3.0};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 20000; ++i) ++counts[SampleIndex(w, rng)];
  CHECK(counts[1] == 0);
  CHECK(testing::ChiSquarePValue(testing::ChiSquare(counts, {0.25, 0.0, 0.75}), 1) > 0.01);
}

TEST_CASE("triplet samples are valid and reproducible") {
  Model model(Small(Representation::kTriplet));
  int complete = 0;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    SampleOptions o;
    o.top_p = 1.0;
    o.seed = seed;
    o.max_tokens = 800;
    const SampleResult r = Sample(model, o);
    CHECK(ValidateSketch(r.sketch).empty());
    CHECK(r.object_ends.size() == r.sketch.objects.size());
    if (!r.truncated) {
      ++complete;
      CHECK(Decode(r.triplets) == r.sketch);
      CHECK(PredictedTriplets(Encode(r.sketch)) == r.triplets);
    }
    const SampleResult again = Sample(model, o);
    CHECK(again.triplets == r.triplets);
  }
  CHECK(complete > 0);
}

TEST_CASE("byte samples parse or report failure") {
  Model model(Small(Representation::kByte));
  int invalid = 0;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    SampleOptions o;
    o.top_p = 1.0;
    o.seed = seed;
    o.max_tokens = 600;
    const SampleResult r = Sample(model, o);
    if (!r.valid) {
      ++invalid;
      CHECK_FALSE(r.error.empty());
    } else {
      CHECK(Serialize(r.sketch) == r.bytes);
    }
  }
  CHECK(invalid > 0);
}

TEST_CASE("guided search on a blank image with an untrained model") {
  Model model(Small(Representation::kTriplet, true));
  GuidedSearchOptions o;
  o.n_samples = 3;
  o.max_tokens = 200;
  const GuidedSearchResult r = GuidedSearch(model, Bitmap(16, 16), o);
  CHECK(ValidateSketch(r.sketch).empty());
  CHECK(r.smoothed_l2 == 0.0);
  o.sigma = 0.0;
  const GuidedSearchResult plain = GuidedSearch(model, Bitmap(16, 16), o);
  CHECK(plain.smoothed_l2 == 0.0);
  CHECK_THROWS(GuidedSearch(model, Bitmap(8, 8), o));
  Model unconditional(Small(Representation::kTriplet));
  CHECK_THROWS(GuidedSearch(unconditional, Bitmap(16, 16), o));
}

TEST_CASE("bitmap image conversion") {
  Bitmap b(4, 4);
  b.at(1, 2) = 1;
  CHECK(BitmapFromImage(ImageFromBitmap(b), 4) == b);
  CHECK_THROWS(BitmapFromImage(std::vector<double>(3), 4));
}

}  // namespace sketchgen
