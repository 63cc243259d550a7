/*!
 * \file sketchgen/generator.cc
 */
#include "sketchgen/generator.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sketchgen/tokens.h"
#include "sketchgen/wire.h"

namespace sketchgen {

std::vector<double> NucleusProbs(const std::vector<double>& probs, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
  std::vector<double> out(probs.size(), 0.0);
  double total = 0.0;
  for (double p : probs) total += std::max(p, 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("distribution has no mass");
  double mass = 0.0;
  double cut = -1.0;
  for (int i : order) {
    const double p = probs[i];
    if (!(p > 0.0)) break;
    if (cut >= 0.0 && p < cut) break;
    out[i] = p;
    mass += p;
    if (cut < 0.0 && mass >= top_p * total) cut = p;
  }
  for (double& p : out) p /= mass;
  return out;
}

int SampleIndex(const std::vector<double>& weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  int last = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  if (last < 0) throw std::invalid_argument("no positive weight");
  return last;
}

namespace {

int ChooseLabel(const StepLogProbs& logp, double top_p, std::mt19937_64& rng) {
  std::vector<double> probs(logp.size());
  for (size_t i = 0; i < logp.size(); ++i) probs[i] = std::exp(logp[i]);
  return SampleIndex(NucleusProbs(probs, top_p), rng);
}

ModelInput Bos() { return ModelInput{}; }

SampleResult SampleTriplets(const Model& model, const SampleOptions& options) {
  std::mt19937_64 rng(options.seed);
  SampleResult result;
  Interpreter interp;
  Model::Session session(model, options.image);
  const int capacity = model.config().max_positions;
  nn::RowVec h = session.Feed(Bos());
  std::vector<nn::RowVec> referrable_outputs;
  while (!interp.terminal()) {
    if (static_cast<int>(result.triplets.size()) >= options.max_tokens ||
        session.length() >= capacity) {
      result.truncated = true;
      break;
    }
    const Slot slot = interp.slot();
    ModelTarget target;
    target.predicted = true;
    target.group = slot.group;
    target.legal_count = slot.legal_count;
    target.end_allowed = slot.end_allowed;
    if (options.suppress_end && slot.end_allowed && slot.legal_count > 0 &&
        interp.at_object_boundary()) {
      target.end_allowed = false;
    }
    const int label = ChooseLabel(model.StepDistribution(h, target, referrable_outputs),
                                  options.top_p, rng);
    const TokenGroup& g = TokenGroups()[slot.group];
    Triplet t;
    if (label == g.cardinality) {
      t = Triplet::End();
    } else if (slot.continuous) {
      t = Triplet::Continuous(Dequantize(label, g));
    } else {
      t = Triplet::Discrete(label);
    }
    const size_t before = interp.completed_objects();
    Interpreter::StepResult step = interp.Step(t);
    result.triplets.push_back(t);
    if (interp.completed_objects() != before) {
      result.object_ends.push_back(static_cast<int>(result.triplets.size()));
    }
    if (interp.terminal()) break;
    const Token token{t, step.context};
    if (session.length() >= capacity) {
      result.truncated = true;
      break;
    }
    h = session.Feed(TripletInput(token, slot, session.length()));
    for (const Token& r : step.referrables) {
      referrable_outputs.push_back(h);
      if (session.length() >= capacity) break;
      h = session.Feed(ReferrableInput(r, session.length()));
    }
  }
  result.sketch = result.truncated ? interp.PartialSketch() : interp.ToSketch();
  return result;
}

SampleResult SampleBytes(const Model& model, const SampleOptions& options) {
  std::mt19937_64 rng(options.seed);
  SampleResult result;
  Model::Session session(model, options.image);
  const int capacity = model.config().max_positions;
  nn::RowVec h = session.Feed(Bos());
  const ModelTarget target = ByteTarget(0);
  while (true) {
    if (static_cast<int>(result.bytes.size()) >= options.max_tokens) {
      result.truncated = true;
      break;
    }
    const int label = ChooseLabel(model.StepDistribution(h, target, {}), options.top_p, rng);
    if (label == kByteEos) break;
    result.bytes.push_back(static_cast<uint8_t>(label));
    if (session.length() >= capacity) {
      result.truncated = true;
      break;
    }
    ModelInput in;
    in.kind = ModelInput::Kind::kByte;
    in.byte = label;
    in.pos = session.length();
    h = session.Feed(in);
  }
  if (result.truncated) {
    result.valid = false;
    result.error = "token budget exhausted";
    return result;
  }
  try {
    result.sketch = Parse(result.bytes);
  } catch (const std::exception& e) {
    result.valid = false;
    result.error = e.what();
  }
  return result;
}

}  // namespace

SampleResult Sample(const Model& model, const SampleOptions& options) {
  return model.config().representation == Representation::kTriplet ? SampleTriplets(model, options)
                                                                   : SampleBytes(model, options);
}

std::vector<double> ImageFromBitmap(const Bitmap& b) {
  return std::vector<double>(b.pixels.begin(), b.pixels.end());
}

Bitmap BitmapFromImage(const std::vector<double>& image, int size) {
  if (image.size() != static_cast<size_t>(size) * size) {
    throw std::invalid_argument("image has " + std::to_string(image.size()) + " pixels, expected " +
                                std::to_string(size) + "^2");
  }
  Bitmap b(size, size);
  for (size_t i = 0; i < image.size(); ++i) b.pixels[i] = image[i] > 0.5 ? 1 : 0;
  return b;
}

std::vector<Example> BuildExamples(const std::vector<Sketch>& corpus, const ModelConfig& config) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const Sketch& s : corpus) {
    out.push_back(MakeExample(s, config.representation));
    if (config.image.enabled) out.back().image = ImageFromBitmap(Render(s, config.image.image_size));
  }
  return out;
}

GuidedSearchResult GuidedSearch(const Model& model, const Bitmap& target,
                                const GuidedSearchOptions& options) {
  if (!model.config().image.enabled) throw std::invalid_argument("guided search needs a conditional model");
  if (model.config().representation != Representation::kTriplet) {
    throw std::invalid_argument("guided search needs a triplet model");
  }
  const int size = model.config().image.image_size;
  if (target.width != size || target.height != size) {
    throw std::invalid_argument("target must be " + std::to_string(size) + "x" + std::to_string(size));
  }
  const std::vector<double> image = ImageFromBitmap(target);
  const std::vector<double> smoothed_target = GaussianSmooth(target, options.sigma);
  auto score = [&](const Sketch& s) {
    const std::vector<double> smoothed = GaussianSmooth(Render(s, size), options.sigma);
    double acc = 0.0;
    for (size_t i = 0; i < smoothed.size(); ++i) {
      acc += (smoothed[i] - smoothed_target[i]) * (smoothed[i] - smoothed_target[i]);
    }
    return std::sqrt(acc);
  };
  std::mt19937_64 seeder(options.seed);
  bool found = false;
  GuidedSearchResult best;
  for (int i = 0; i < options.n_samples; ++i) {
    SampleOptions so;
    so.top_p = options.top_p;
    so.max_tokens = options.max_tokens;
    so.seed = seeder();
    so.image = &image;
    so.suppress_end = true;
    const SampleResult r = Sample(model, so);
    Sketch prefix;
    for (size_t k = 0; k <= r.sketch.objects.size(); ++k) {
      if (k > 0) prefix.objects.push_back(r.sketch.objects[k - 1]);
      const int tokens = k == 0 ? 0 : r.object_ends[k - 1];
      const double l2 = score(prefix);
      const bool better =
          !found || l2 < best.smoothed_l2 ||
          (l2 == best.smoothed_l2 &&
           (static_cast<int>(k) > best.num_objects ||
            (static_cast<int>(k) == best.num_objects && tokens < best.num_tokens)));
      if (better) {
        found = true;
        best.sketch = prefix;
        best.smoothed_l2 = l2;
        best.sample_index = i;
        best.num_objects = static_cast<int>(k);
        best.num_tokens = tokens;
      }
    }
  }
  if (!found) throw std::runtime_error("guided search found no candidate prefix");
  return best;
}

}  // namespace sketchgen
