/*!
 * \file sketchgen/model.h
 * \brief Autoregressive decoders over triplet or byte tokens: embeddings, per-group heads, the
 * pointer head, lane packing, NLL, incremental decoding, image conditioning, checkpoints and the
 * training loop.
 *
 * Position p of an example reads input p (BOS at p = 0, otherwise token p - 1) and predicts
 * token p. Referrable tokens are inputs like any other token but carry no loss; the outputs at the
 * positions where they are the target are the pointer candidates.
 */
#ifndef SKETCHGEN_MODEL_H_
#define SKETCHGEN_MODEL_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sketchgen/nn.h"
#include "sketchgen/sketch.h"
#include "sketchgen/triplet.h"

namespace sketchgen {

enum class Representation { kTriplet, kByte };

const char* RepresentationName(Representation r);
Representation ParseRepresentation(const std::string& name);

struct ImageSpec {
  bool enabled = false;
  int image_size = 64;
  int patch_size = 8;
  int depth = 1;

  int num_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
};

struct ModelConfig {
  Representation representation = Representation::kTriplet;
  int d_model = 64;
  int num_blocks = 2;
  int num_heads = 4;
  double dropout = 0.1;
  double learning_rate = 1e-4;
  double clip_norm = 1.0;
  int max_positions = 1024;
  int max_objects = 512;
  int max_relative = 256;
  ImageSpec image;
  uint64_t init_seed = 0;

  /*! Width 384, 24 blocks. */
  static ModelConfig FullScale();
  /*! Width 64, 2 blocks. */
  static ModelConfig DeskScale();

  void Validate() const;
  nlohmann::json ToJson() const;
  /*! Missing keys keep their defaults. */
  static ModelConfig FromJson(const nlohmann::json& j);
};

/*! One model input row. */
struct ModelInput {
  enum class Kind { kBos, kTriplet, kReferrable, kByte };
  Kind kind = Kind::kBos;
  int field = 0;
  int group = 0;
  /*! Row of the group's value table: discrete value, quantized bin, or cardinality for end. */
  int value = 0;
  int n = 0;
  int m = 0;
  int part = 0;
  int byte = 0;
  /*! Position within the example. */
  int pos = 0;
};

/*!
 * What position p predicts. Triplet labels index a (cardinality + 1)-way support whose last entry
 * is the end flag; for pointer slots entry k < legal_count is the k-th referrable. Byte labels are
 * 0..256.
 */
struct ModelTarget {
  bool predicted = false;
  bool referrable_output = false;
  int group = -1;
  int label = 0;
  int legal_count = 0;
  bool end_allowed = false;
};

struct Example {
  std::vector<ModelInput> inputs;
  std::vector<ModelTarget> targets;
  /*! Row-major image_size^2 intensities in [0, 1] (conditional models only). */
  std::vector<double> image;
  int num_objects = 0;

  int size() const { return static_cast<int>(inputs.size()); }
  int num_predicted() const;
};

ModelInput TripletInput(const Token& token, const Slot& slot, int pos);
ModelInput ReferrableInput(const Token& token, int pos);
ModelTarget TripletTarget(const Slot& slot, const Triplet& t);
ModelTarget ByteTarget(int byte);

/*! Encodes with Encode(); continuous values are quantized at this boundary. */
Example MakeTripletExample(const Sketch& s);
Example MakeByteExample(const Sketch& s);
Example MakeExample(const Sketch& s, Representation r);

/*! Sum over predicted steps of log2 of the legal support size (257 per byte token). */
double UniformBaselineNll(const Sketch& s, Representation r);

/*! Per-step log-probabilities over the full support; masked entries are -inf. */
using StepLogProbs = std::vector<double>;

class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  struct RunOptions {
    bool backward = false;
    /*! Multiplies the loss gradient (e.g. 1 / tokens in the batch). */
    double grad_scale = 1.0;
    /*! Dropout is applied only when set. */
    std::mt19937_64* dropout_rng = nullptr;
    /*! Per example, per predicted step: natural-log probability of the label. */
    std::vector<std::vector<double>>* label_logp = nullptr;
    /*! Per example, per predicted step: the full log-probability vector. */
    std::vector<std::vector<StepLogProbs>>* distributions = nullptr;
  };
  /*!
   * One packed lane: examples concatenated, attention isolated per example. Returns the summed NLL
   * in nats over predicted steps. With `backward`, accumulates parameter gradients.
   */
  double Run(std::span<const Example* const> lane, const RunOptions& options);

  /*! Total NLL in bits of one example. */
  double NllBits(const Example& e);

  /*! Memory rows (num_patches x D) for one image. */
  nn::Mat EncodeImage(const std::vector<double>& image) const;

  /*! Log-probabilities for one step from the final hidden state. */
  StepLogProbs StepDistribution(const nn::RowVec& h, const ModelTarget& slot,
                                const std::vector<nn::RowVec>& referrable_outputs) const;

  /*! Incremental decoding with cached keys and values. */
  class Session {
   public:
    Session(const Model& model, const std::vector<double>* image);
    /*! Feeds one input; returns the final hidden state at its position. */
    nn::RowVec Feed(const ModelInput& input);
    int length() const { return length_; }

   private:
    const Model* model_;
    std::vector<nn::Mat> keys_;
    std::vector<nn::Mat> values_;
    std::vector<nn::Mat> memory_keys_;
    std::vector<nn::Mat> memory_values_;
    int length_ = 0;
  };

  void Save(const std::string& path) const;
  static std::unique_ptr<Model> Load(const std::string& path);

  int field_vocabulary() const { return field_vocabulary_; }

  /*! Input embedding row (sum of table lookups). */
  nn::RowVec EmbedRow(const ModelInput& in) const;

 private:
  friend class Session;

  void EmbedBackward(const ModelInput& in, const nn::RowVec& grad);
  nn::Mat EncodeImages(std::span<const Example* const> lane,
                       std::vector<nn::Block::Cache>* caches, nn::Mat* patches,
                       nn::LayerNorm::Cache* ln_cache, nn::Mat* pre_ln) const;
  void EncodeImagesBackward(const nn::Mat& dmemory, int num_images,
                            const std::vector<nn::Block::Cache>& caches, const nn::Mat& patches,
                            const nn::LayerNorm::Cache& ln_cache);
  nn::Mat Patches(const std::vector<double>& image) const;

  ModelConfig config_;
  nn::ParamStore store_;
  int field_vocabulary_ = 0;

  // embeddings
  nn::Param* bos_ = nullptr;
  nn::Param* field_ = nullptr;
  std::vector<nn::Param*> value_;
  nn::Param* obj_ = nullptr;
  nn::Param* rel_ = nullptr;
  nn::Param* pos_ = nullptr;
  nn::Param* ref_ = nullptr;
  nn::Param* byte_ = nullptr;

  std::vector<nn::Block> blocks_;
  nn::LayerNorm ln_f_;

  // heads
  std::vector<nn::Linear> group_heads_;
  nn::Param* w_ptr_ = nullptr;
  nn::Linear ptr_end_;
  nn::Linear byte_head_;

  // image encoder
  nn::Linear patch_embed_;
  nn::Param* patch_pos_ = nullptr;
  std::vector<nn::Block> image_blocks_;
  nn::LayerNorm image_ln_;
};

// ------------------------------------------------------------------------------ training

struct TrainOptions {
  int steps = 1000;
  /*! Examples per optimizer step. */
  int batch_size = 8;
  /*! Token budget per packed lane (0: max_positions). */
  int lane_tokens = 0;
  uint64_t seed = 0;
  /*! Called after every step; returning false stops training. */
  std::function<bool(int step, double bits_per_token, double grad_norm)> on_step;
};

struct TrainStats {
  int steps = 0;
  double last_bits_per_token = 0.0;
};

/*! Greedy packing of examples (in order) into lanes of at most `budget` positions. */
std::vector<std::vector<const Example*>> PackLanes(std::span<const Example* const> batch,
                                                   int budget);

class Trainer {
 public:
  Trainer(Model& model, uint64_t seed);
  /*!
   * One Adam update on the mean NLL of `batch` with global gradient-norm clipping. Returns the
   * batch bits per predicted token; throws std::runtime_error on a non-finite loss.
   */
  double Step(std::span<const Example* const> batch, int lane_tokens, double* grad_norm = nullptr);
  int64_t steps() const { return adam_.steps(); }

 private:
  Model* model_;
  nn::Adam adam_;
  std::mt19937_64 rng_;
};

TrainStats Train(Model& model, const std::vector<Example>& corpus, const TrainOptions& options);

/*! Mean bits per predicted token over a corpus (no dropout). */
double CorpusBitsPerToken(Model& model, const std::vector<Example>& corpus);

}  // namespace sketchgen

#endif  // SKETCHGEN_MODEL_H_
