/*!
 * \file sketchgen/model.cc
 */
#include "sketchgen/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sketchgen/tokens.h"
#include "sketchgen/wire.h"

namespace sketchgen {

using nn::Mat;
using nn::RowVec;

namespace {

constexpr int kMaxParts = 8;
constexpr double kLn2 = 0.69314718055994530942;
constexpr char kMagic[8] = {'S', 'K', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kCheckpointVersion = 1;

int PointerGroup() {
  static const int g = GroupIndex("pointer");
  return g;
}

int Clamp(int v, int size) { return std::clamp(v, 0, size - 1); }

/*! Width of the output support of a slot: cardinality + end column, or 257 bytes. */
int SupportWidth(const ModelTarget& t) {
  if (t.group < 0) return kByteVocabulary;
  return TokenGroups()[t.group].cardinality + 1;
}

std::vector<char> AllowedMask(const ModelTarget& t) {
  const int width = SupportWidth(t);
  std::vector<char> allowed(width, 0);
  if (t.group < 0) {
    std::fill(allowed.begin(), allowed.end(), 1);
    return allowed;
  }
  for (int k = 0; k < t.legal_count && k < width - 1; ++k) allowed[k] = 1;
  if (t.end_allowed) allowed[width - 1] = 1;
  return allowed;
}

/*! Fills log-probabilities (masked entries -inf) and returns the log-sum-exp. */
double MaskedLogSoftmax(const RowVec& logits, const std::vector<char>& allowed, StepLogProbs* out) {
  const double lse = nn::LogSumExp(logits, allowed);
  out->assign(logits.size(), -std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (allowed[k]) (*out)[k] = logits(k) - lse;
  }
  return lse;
}

/*! Gradient of -log p(label) wrt logits, scaled. */
RowVec NllGradient(const StepLogProbs& logp, int label, double scale) {
  RowVec d(logp.size());
  for (size_t k = 0; k < logp.size(); ++k) {
    d(k) = std::isinf(logp[k]) ? 0.0 : std::exp(logp[k]) * scale;
  }
  d(label) -= scale;
  return d;
}

template <typename T>
void WritePod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

// ------------------------------------------------------------------------------ config

const char* RepresentationName(Representation r) {
  return r == Representation::kTriplet ? "triplet" : "byte";
}

Representation ParseRepresentation(const std::string& name) {
  if (name == "triplet") return Representation::kTriplet;
  if (name == "byte") return Representation::kByte;
  throw std::invalid_argument("unknown representation '" + name + "'");
}

ModelConfig ModelConfig::FullScale() {
  ModelConfig c;
  c.d_model = 384;
  c.num_blocks = 24;
  c.num_heads = 8;
  return c;
}

ModelConfig ModelConfig::DeskScale() { return ModelConfig{}; }

void ModelConfig::Validate() const {
  if (d_model <= 0 || num_heads <= 0 || d_model % num_heads != 0) {
    throw std::invalid_argument("d_model must be a positive multiple of num_heads");
  }
  if (num_blocks < 0) throw std::invalid_argument("num_blocks must be non-negative");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
  if (max_positions <= 0 || max_objects <= 0 || max_relative <= 0) {
    throw std::invalid_argument("table sizes must be positive");
  }
  if (image.enabled) {
    if (image.patch_size <= 0 || image.image_size <= 0 || image.image_size % image.patch_size != 0) {
      throw std::invalid_argument("image size must be a multiple of the patch size");
    }
    if (image.depth < 0) throw std::invalid_argument("image depth must be non-negative");
  }
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"representation", RepresentationName(representation)},
          {"d_model", d_model},
          {"num_blocks", num_blocks},
          {"num_heads", num_heads},
          {"dropout", dropout},
          {"learning_rate", learning_rate},
          {"clip_norm", clip_norm},
          {"max_positions", max_positions},
          {"max_objects", max_objects},
          {"max_relative", max_relative},
          {"init_seed", init_seed},
          {"image",
           {{"enabled", image.enabled},
            {"image_size", image.image_size},
            {"patch_size", image.patch_size},
            {"depth", image.depth}}}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  if (j.contains("representation")) {
    c.representation = ParseRepresentation(j.at("representation").get<std::string>());
  }
  c.d_model = j.value("d_model", c.d_model);
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.dropout = j.value("dropout", c.dropout);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.max_objects = j.value("max_objects", c.max_objects);
  c.max_relative = j.value("max_relative", c.max_relative);
  c.init_seed = j.value("init_seed", c.init_seed);
  if (j.contains("image")) {
    const auto& im = j.at("image");
    c.image.enabled = im.value("enabled", c.image.enabled);
    c.image.image_size = im.value("image_size", c.image.image_size);
    c.image.patch_size = im.value("patch_size", c.image.patch_size);
    c.image.depth = im.value("depth", c.image.depth);
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------- examples

int Example::num_predicted() const {
  int n = 0;
  for (const auto& t : targets) n += t.predicted ? 1 : 0;
  return n;
}

namespace {

int ValueRow(const Slot& slot, const Triplet& t) {
  const TokenGroup& g = TokenGroups()[slot.group];
  if (t.f) return g.cardinality;
  if (slot.continuous) return Quantize(t.c, g);
  return static_cast<int>(t.d);
}

}  // namespace

ModelInput TripletInput(const Token& token, const Slot& slot, int pos) {
  ModelInput in;
  in.kind = ModelInput::Kind::kTriplet;
  in.field = FieldIdIndex(token.ctx.field_id);
  in.group = slot.group;
  in.value = ValueRow(slot, token.t);
  in.n = token.ctx.n;
  in.m = token.ctx.m;
  in.pos = pos;
  return in;
}

ModelInput ReferrableInput(const Token& token, int pos) {
  ModelInput in;
  in.kind = ModelInput::Kind::kReferrable;
  in.field = FieldIdIndex(token.ctx.field_id);
  in.part = token.ctx.referrable_part;
  in.n = token.ctx.n;
  in.m = token.ctx.m;
  in.pos = pos;
  return in;
}

ModelTarget TripletTarget(const Slot& slot, const Triplet& t) {
  ModelTarget target;
  target.predicted = true;
  target.group = slot.group;
  target.label = ValueRow(slot, t);
  target.legal_count = slot.legal_count;
  target.end_allowed = slot.end_allowed;
  return target;
}

ModelTarget ByteTarget(int byte) {
  ModelTarget target;
  target.predicted = true;
  target.group = -1;
  target.label = byte;
  target.legal_count = kByteVocabulary;
  return target;
}

Example MakeTripletExample(const Sketch& s) {
  const std::vector<AnnotatedToken> annotated = Annotate(PredictedTriplets(Encode(s)));
  Example e;
  e.num_objects = static_cast<int>(s.objects.size());
  const int len = static_cast<int>(annotated.size());
  e.inputs.resize(len);
  e.targets.resize(len);
  for (int p = 0; p < len; ++p) {
    if (p > 0) {
      const AnnotatedToken& prev = annotated[p - 1];
      e.inputs[p] = prev.token.ctx.is_referrable ? ReferrableInput(prev.token, p)
                                                 : TripletInput(prev.token, prev.slot, p);
    }
    const AnnotatedToken& cur = annotated[p];
    if (cur.token.ctx.is_referrable) {
      e.targets[p].referrable_output = true;
    } else {
      e.targets[p] = TripletTarget(cur.slot, cur.token.t);
    }
  }
  return e;
}

Example MakeByteExample(const Sketch& s) {
  const std::vector<int> tokens = ByteTokens(Serialize(s));
  Example e;
  e.num_objects = static_cast<int>(s.objects.size());
  const int len = static_cast<int>(tokens.size());
  e.inputs.resize(len);
  e.targets.resize(len);
  for (int p = 0; p < len; ++p) {
    if (p > 0) {
      e.inputs[p].kind = ModelInput::Kind::kByte;
      e.inputs[p].byte = tokens[p - 1];
      e.inputs[p].pos = p;
    }
    e.targets[p] = ByteTarget(tokens[p]);
  }
  return e;
}

Example MakeExample(const Sketch& s, Representation r) {
  return r == Representation::kTriplet ? MakeTripletExample(s) : MakeByteExample(s);
}

double UniformBaselineNll(const Sketch& s, Representation r) {
  if (r == Representation::kByte) {
    return static_cast<double>(Serialize(s).size() + 1) * std::log2(double{kByteVocabulary});
  }
  double bits = 0.0;
  for (const AnnotatedToken& a : Annotate(PredictedTriplets(Encode(s)))) {
    if (!a.token.ctx.is_referrable) bits += std::log2(static_cast<double>(SupportSize(a.slot)));
  }
  return bits;
}

// ------------------------------------------------------------------------------- model

Model::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(config_.init_seed);
  const int d = config_.d_model;
  using nn::Init;
  bos_ = store_.Add("embed.bos", 1, d, Init::kNormal, &rng);
  if (config_.representation == Representation::kTriplet) {
    field_vocabulary_ = static_cast<int>(FieldIds().size());
    field_ = store_.Add("embed.field", field_vocabulary_, d, Init::kNormal, &rng);
    for (const TokenGroup& g : TokenGroups()) {
      value_.push_back(
          store_.Add("embed.value." + g.name, g.cardinality + 1, d, Init::kNormal, &rng));
    }
    obj_ = store_.Add("embed.object", config_.max_objects, d, Init::kNormal, &rng);
    rel_ = store_.Add("embed.relative", config_.max_relative, d, Init::kNormal, &rng);
    ref_ = store_.Add("embed.part", kMaxParts, d, Init::kNormal, &rng);
  } else {
    byte_ = store_.Add("embed.byte", kByteVocabulary, d, Init::kNormal, &rng);
  }
  pos_ = store_.Add("embed.position", config_.max_positions, d, Init::kNormal, &rng);

  blocks_.resize(config_.num_blocks);
  for (int i = 0; i < config_.num_blocks; ++i) {
    blocks_[i].Init(store_, "block" + std::to_string(i), d, config_.num_heads,
                    config_.image.enabled, &rng);
  }
  ln_f_.Init(store_, "ln_f", d, &rng);

  if (config_.representation == Representation::kTriplet) {
    group_heads_.resize(TokenGroups().size());
    for (size_t g = 0; g < TokenGroups().size(); ++g) {
      if (static_cast<int>(g) == PointerGroup()) continue;
      group_heads_[g].Init(store_, "head." + TokenGroups()[g].name, d,
                           TokenGroups()[g].cardinality + 1, &rng);
    }
    w_ptr_ = store_.Add("head.pointer.w_ptr", d, d, Init::kNormal, &rng);
    ptr_end_.Init(store_, "head.pointer.end", d, 1, &rng);
  } else {
    byte_head_.Init(store_, "head.byte", d, kByteVocabulary, &rng);
  }

  if (config_.image.enabled) {
    const int ps = config_.image.patch_size;
    patch_embed_.Init(store_, "image.patch", ps * ps, d, &rng);
    patch_pos_ =
        store_.Add("image.position", config_.image.num_patches(), d, Init::kNormal, &rng);
    image_blocks_.resize(config_.image.depth);
    for (int i = 0; i < config_.image.depth; ++i) {
      image_blocks_[i].Init(store_, "image.block" + std::to_string(i), d, config_.num_heads,
                            false, &rng);
    }
    image_ln_.Init(store_, "image.ln", d, &rng);
  }
}

RowVec Model::EmbedRow(const ModelInput& in) const {
  if (in.pos < 0 || in.pos >= config_.max_positions) {
    throw std::out_of_range("position " + std::to_string(in.pos) + " exceeds max_positions");
  }
  switch (in.kind) {
    case ModelInput::Kind::kBos:
      return bos_->value.row(0);
    case ModelInput::Kind::kTriplet: {
      if (field_ == nullptr) throw std::logic_error("triplet input to a byte model");
      const Mat& values = value_.at(in.group)->value;
      if (in.value < 0 || in.value >= values.rows()) {
        throw std::out_of_range("value outside the group range");
      }
      return field_->value.row(in.field) + values.row(in.value) +
             obj_->value.row(Clamp(in.n, config_.max_objects)) +
             rel_->value.row(Clamp(in.m, config_.max_relative));
    }
    case ModelInput::Kind::kReferrable:
      if (field_ == nullptr) throw std::logic_error("referrable input to a byte model");
      if (in.part < 0 || in.part >= kMaxParts) throw std::out_of_range("referrable part");
      return field_->value.row(in.field) + ref_->value.row(in.part) + pos_->value.row(in.pos);
    case ModelInput::Kind::kByte:
      if (byte_ == nullptr) throw std::logic_error("byte input to a triplet model");
      if (in.byte < 0 || in.byte >= kByteVocabulary) throw std::out_of_range("byte value");
      return byte_->value.row(in.byte) + pos_->value.row(in.pos);
  }
  throw std::logic_error("unreachable");
}

void Model::EmbedBackward(const ModelInput& in, const RowVec& grad) {
  switch (in.kind) {
    case ModelInput::Kind::kBos:
      bos_->grad.row(0) += grad;
      break;
    case ModelInput::Kind::kTriplet:
      field_->grad.row(in.field) += grad;
      value_[in.group]->grad.row(in.value) += grad;
      obj_->grad.row(Clamp(in.n, config_.max_objects)) += grad;
      rel_->grad.row(Clamp(in.m, config_.max_relative)) += grad;
      break;
    case ModelInput::Kind::kReferrable:
      field_->grad.row(in.field) += grad;
      ref_->grad.row(in.part) += grad;
      pos_->grad.row(in.pos) += grad;
      break;
    case ModelInput::Kind::kByte:
      byte_->grad.row(in.byte) += grad;
      pos_->grad.row(in.pos) += grad;
      break;
  }
}

// ------------------------------------------------------------------------------- image

Mat Model::Patches(const std::vector<double>& image) const {
  const int side = config_.image.image_size;
  const int ps = config_.image.patch_size;
  if (static_cast<int>(image.size()) != side * side) {
    throw std::invalid_argument("image has " + std::to_string(image.size()) + " pixels, expected " +
                                std::to_string(side * side));
  }
  const int grid = side / ps;
  Mat patches(grid * grid, ps * ps);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      for (int y = 0; y < ps; ++y) {
        for (int x = 0; x < ps; ++x) {
          patches(gy * grid + gx, y * ps + x) = image[(gy * ps + y) * side + gx * ps + x];
        }
      }
    }
  }
  return patches;
}

Mat Model::EncodeImages(std::span<const Example* const> lane,
                        std::vector<nn::Block::Cache>* caches, Mat* patches,
                        nn::LayerNorm::Cache* ln_cache, Mat* pre_ln) const {
  const int num_patches = config_.image.num_patches();
  const int ps = config_.image.patch_size;
  const int count = static_cast<int>(lane.size());
  patches->resize(count * num_patches, ps * ps);
  for (int e = 0; e < count; ++e) {
    patches->middleRows(e * num_patches, num_patches) = Patches(lane[e]->image);
  }
  Mat z = patch_embed_.Forward(*patches);
  for (int e = 0; e < count; ++e) z.middleRows(e * num_patches, num_patches) += patch_pos_->value;
  std::vector<nn::AttentionSpan> spans;
  for (int e = 0; e < count; ++e) {
    spans.push_back({e * num_patches, (e + 1) * num_patches, e * num_patches,
                     (e + 1) * num_patches, false});
  }
  caches->resize(image_blocks_.size());
  for (size_t b = 0; b < image_blocks_.size(); ++b) {
    z = image_blocks_[b].Forward(z, spans, nullptr, {}, 0.0, nullptr, &(*caches)[b]);
  }
  *pre_ln = z;
  return image_ln_.Forward(z, ln_cache);
}

void Model::EncodeImagesBackward(const Mat& dmemory, int num_images,
                                 const std::vector<nn::Block::Cache>& caches, const Mat& patches,
                                 const nn::LayerNorm::Cache& ln_cache) {
  const int num_patches = config_.image.num_patches();
  std::vector<nn::AttentionSpan> spans;
  for (int e = 0; e < num_images; ++e) {
    spans.push_back({e * num_patches, (e + 1) * num_patches, e * num_patches,
                     (e + 1) * num_patches, false});
  }
  Mat dz = image_ln_.Backward(dmemory, ln_cache);
  for (int b = static_cast<int>(image_blocks_.size()) - 1; b >= 0; --b) {
    dz = image_blocks_[b].Backward(dz, spans, {}, caches[b], nullptr);
  }
  for (int e = 0; e < num_images; ++e) patch_pos_->grad += dz.middleRows(e * num_patches, num_patches);
  patch_embed_.Backward(patches, dz);
}

Mat Model::EncodeImage(const std::vector<double>& image) const {
  if (!config_.image.enabled) throw std::logic_error("model is not image-conditioned");
  Example e;
  e.image = image;
  const Example* lane[1] = {&e};
  std::vector<nn::Block::Cache> caches;
  Mat patches, pre;
  nn::LayerNorm::Cache ln;
  return EncodeImages(lane, &caches, &patches, &ln, &pre);
}

// --------------------------------------------------------------------------------- run

double Model::Run(std::span<const Example* const> lane, const RunOptions& options) {
  const int d = config_.d_model;
  const int count = static_cast<int>(lane.size());
  std::vector<int> offset(count + 1, 0);
  for (int e = 0; e < count; ++e) offset[e + 1] = offset[e] + lane[e]->size();
  const int total = offset[count];
  std::mt19937_64* rng = config_.dropout > 0.0 ? options.dropout_rng : nullptr;

  Mat x(total, d);
  for (int e = 0; e < count; ++e) {
    const Example& ex = *lane[e];
    if (ex.targets.size() != ex.inputs.size()) throw std::invalid_argument("ragged example");
    for (int p = 0; p < ex.size(); ++p) x.row(offset[e] + p) = EmbedRow(ex.inputs[p]);
  }
  const Mat emb_mask = nn::DropoutMask(total, d, config_.dropout, rng);
  if (emb_mask.size() > 0) x = x.cwiseProduct(emb_mask);

  std::vector<nn::AttentionSpan> self_spans, cross_spans;
  for (int e = 0; e < count; ++e) {
    self_spans.push_back({offset[e], offset[e + 1], offset[e], offset[e + 1], true});
  }
  Mat memory, patches, pre_ln;
  std::vector<nn::Block::Cache> image_caches;
  nn::LayerNorm::Cache image_ln_cache;
  if (config_.image.enabled) {
    memory = EncodeImages(lane, &image_caches, &patches, &image_ln_cache, &pre_ln);
    const int np = config_.image.num_patches();
    for (int e = 0; e < count; ++e) {
      cross_spans.push_back({offset[e], offset[e + 1], e * np, (e + 1) * np, false});
    }
  }

  std::vector<nn::Block::Cache> caches(blocks_.size());
  Mat h = x;
  for (size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b].Forward(h, self_spans, config_.image.enabled ? &memory : nullptr, cross_spans,
                           config_.dropout, rng, &caches[b]);
  }
  nn::LayerNorm::Cache lnf_cache;
  const Mat f = ln_f_.Forward(h, &lnf_cache);

  Mat df;
  if (options.backward) df = Mat::Zero(total, d);
  if (options.label_logp) options.label_logp->assign(count, {});
  if (options.distributions) options.distributions->assign(count, {});

  // Output rows of predicted steps, per example in order, recorded for the optional outputs.
  struct StepOut {
    int example;
    int local;
    StepLogProbs logp;
    int label;
  };
  std::vector<StepOut> outputs;
  double nll = 0.0;
  auto record = [&](int e, int local, StepLogProbs&& logp, int label) {
    const double lp = logp[label];
    if (!std::isfinite(lp)) {
      throw std::invalid_argument("label outside the legal support at position " +
                                  std::to_string(local));
    }
    nll -= lp;
    if (options.label_logp || options.distributions) {
      outputs.push_back({e, local, std::move(logp), label});
    }
  };

  const double scale = options.grad_scale;
  if (config_.representation == Representation::kByte) {
    std::vector<int> rows;
    std::vector<std::pair<int, int>> where;
    for (int e = 0; e < count; ++e) {
      for (int p = 0; p < lane[e]->size(); ++p) {
        if (lane[e]->targets[p].predicted) {
          rows.push_back(offset[e] + p);
          where.push_back({e, p});
        }
      }
    }
    Mat fr(rows.size(), d);
    for (size_t i = 0; i < rows.size(); ++i) fr.row(i) = f.row(rows[i]);
    const Mat logits = byte_head_.Forward(fr);
    Mat dlogits = Mat::Zero(logits.rows(), logits.cols());
    for (size_t i = 0; i < rows.size(); ++i) {
      const ModelTarget& t = lane[where[i].first]->targets[where[i].second];
      StepLogProbs logp;
      MaskedLogSoftmax(logits.row(i), AllowedMask(t), &logp);
      if (options.backward) dlogits.row(i) = NllGradient(logp, t.label, scale);
      record(where[i].first, where[i].second, std::move(logp), t.label);
    }
    if (options.backward) {
      const Mat dfr = byte_head_.Backward(fr, dlogits);
      for (size_t i = 0; i < rows.size(); ++i) df.row(rows[i]) += dfr.row(i);
    }
  } else {
    const int num_groups = NumTokenGroups();
    std::vector<std::vector<std::pair<int, int>>> by_group(num_groups);
    for (int e = 0; e < count; ++e) {
      for (int p = 0; p < lane[e]->size(); ++p) {
        const ModelTarget& t = lane[e]->targets[p];
        if (t.predicted) by_group.at(t.group).push_back({e, p});
      }
    }
    for (int g = 0; g < num_groups; ++g) {
      const auto& members = by_group[g];
      if (members.empty() || g == PointerGroup()) continue;
      Mat fg(members.size(), d);
      for (size_t i = 0; i < members.size(); ++i) {
        fg.row(i) = f.row(offset[members[i].first] + members[i].second);
      }
      const Mat logits = group_heads_[g].Forward(fg);
      Mat dlogits = Mat::Zero(logits.rows(), logits.cols());
      for (size_t i = 0; i < members.size(); ++i) {
        const ModelTarget& t = lane[members[i].first]->targets[members[i].second];
        StepLogProbs logp;
        MaskedLogSoftmax(logits.row(i), AllowedMask(t), &logp);
        if (options.backward) dlogits.row(i) = NllGradient(logp, t.label, scale);
        record(members[i].first, members[i].second, std::move(logp), t.label);
      }
      if (options.backward) {
        const Mat dfg = group_heads_[g].Backward(fg, dlogits);
        for (size_t i = 0; i < members.size(); ++i) {
          df.row(offset[members[i].first] + members[i].second) += dfg.row(i);
        }
      }
    }
    // Pointer steps: candidates are the outputs at earlier referrable positions.
    if (!by_group[PointerGroup()].empty()) {
      std::vector<std::vector<int>> refs(count);
      for (int e = 0; e < count; ++e) {
        for (int p = 0; p < lane[e]->size(); ++p) {
          if (lane[e]->targets[p].referrable_output) refs[e].push_back(p);
        }
      }
      const int width = kNumBins + 1;
      for (const auto& [e, p] : by_group[PointerGroup()]) {
        const ModelTarget& t = lane[e]->targets[p];
        const int row = offset[e] + p;
        std::vector<int> cands;
        for (int r : refs[e]) {
          if (r < p && static_cast<int>(cands.size()) < t.legal_count) cands.push_back(offset[e] + r);
        }
        if (static_cast<int>(cands.size()) != t.legal_count) {
          throw std::invalid_argument("pointer step has fewer referrables than its legal count");
        }
        const RowVec pvec = f.row(row) * w_ptr_->value;
        RowVec logits = RowVec::Zero(width);
        for (size_t k = 0; k < cands.size(); ++k) logits(k) = f.row(cands[k]).dot(pvec);
        logits(width - 1) = ptr_end_.Forward(f.row(row))(0, 0);
        StepLogProbs logp;
        MaskedLogSoftmax(logits, AllowedMask(t), &logp);
        if (options.backward) {
          const RowVec dl = NllGradient(logp, t.label, scale);
          RowVec dp = RowVec::Zero(d);
          for (size_t k = 0; k < cands.size(); ++k) {
            dp += dl(k) * f.row(cands[k]);
            df.row(cands[k]) += dl(k) * pvec;
          }
          w_ptr_->grad.noalias() += f.row(row).transpose() * dp;
          df.row(row) += dp * w_ptr_->value.transpose();
          Mat dend(1, 1);
          dend(0, 0) = dl(width - 1);
          df.row(row) += ptr_end_.Backward(f.row(row), dend).row(0);
        }
        record(e, p, std::move(logp), t.label);
      }
    }
  }

  if (options.label_logp || options.distributions) {
    std::sort(outputs.begin(), outputs.end(), [](const StepOut& a, const StepOut& b) {
      return a.example != b.example ? a.example < b.example : a.local < b.local;
    });
    for (StepOut& o : outputs) {
      if (options.label_logp) (*options.label_logp)[o.example].push_back(o.logp[o.label]);
      if (options.distributions) (*options.distributions)[o.example].push_back(std::move(o.logp));
    }
  }

  if (options.backward) {
    Mat dh = ln_f_.Backward(df, lnf_cache);
    Mat dmemory;
    if (config_.image.enabled) dmemory = Mat::Zero(memory.rows(), memory.cols());
    for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b) {
      dh = blocks_[b].Backward(dh, self_spans, cross_spans, caches[b],
                               config_.image.enabled ? &dmemory : nullptr);
    }
    if (emb_mask.size() > 0) dh = dh.cwiseProduct(emb_mask);
    for (int e = 0; e < count; ++e) {
      for (int p = 0; p < lane[e]->size(); ++p) {
        EmbedBackward(lane[e]->inputs[p], dh.row(offset[e] + p));
      }
    }
    if (config_.image.enabled) {
      EncodeImagesBackward(dmemory, count, image_caches, patches, image_ln_cache);
    }
  }
  return nll;
}

double Model::NllBits(const Example& e) {
  const Example* lane[1] = {&e};
  return Run(lane, {}) / kLn2;
}

StepLogProbs Model::StepDistribution(const RowVec& h, const ModelTarget& slot,
                                     const std::vector<RowVec>& referrable_outputs) const {
  StepLogProbs logp;
  if (config_.representation == Representation::kByte) {
    MaskedLogSoftmax(byte_head_.Forward(h), AllowedMask(slot), &logp);
    return logp;
  }
  if (slot.group == PointerGroup()) {
    if (static_cast<int>(referrable_outputs.size()) < slot.legal_count) {
      throw std::invalid_argument("pointer step has fewer referrables than its legal count");
    }
    const RowVec pvec = h * w_ptr_->value;
    RowVec logits = RowVec::Zero(kNumBins + 1);
    for (int k = 0; k < slot.legal_count; ++k) logits(k) = referrable_outputs[k].dot(pvec);
    logits(kNumBins) = ptr_end_.Forward(h)(0, 0);
    MaskedLogSoftmax(logits, AllowedMask(slot), &logp);
    return logp;
  }
  MaskedLogSoftmax(group_heads_.at(slot.group).Forward(h), AllowedMask(slot), &logp);
  return logp;
}

// ----------------------------------------------------------------------------- session

Model::Session::Session(const Model& model, const std::vector<double>* image) : model_(&model) {
  const int d = model.config_.d_model;
  const int cap = model.config_.max_positions;
  keys_.assign(model.blocks_.size(), Mat(cap, d));
  values_.assign(model.blocks_.size(), Mat(cap, d));
  if (model.config_.image.enabled) {
    if (image == nullptr) throw std::invalid_argument("conditional model needs an image");
    const Mat memory = model.EncodeImage(*image);
    for (const nn::Block& b : model.blocks_) {
      memory_keys_.push_back(b.cross_attn.k.Forward(memory));
      memory_values_.push_back(b.cross_attn.v.Forward(memory));
    }
  }
}

namespace {

RowVec AttendRow(const RowVec& q, const Mat& keys, const Mat& values, int rows, int heads) {
  const int dim = static_cast<int>(q.size());
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  RowVec out(dim);
  for (int h = 0; h < heads; ++h) {
    const auto kh = keys.block(0, h * dh, rows, dh);
    Eigen::VectorXd s = (kh * q.segment(h * dh, dh).transpose()) * scale;
    s = (s.array() - s.maxCoeff()).exp();
    s /= s.sum();
    out.segment(h * dh, dh) = s.transpose() * values.block(0, h * dh, rows, dh);
  }
  return out;
}

}  // namespace

RowVec Model::Session::Feed(const ModelInput& input) {
  if (length_ >= model_->config_.max_positions) throw std::out_of_range("session is full");
  Mat x = model_->EmbedRow(input);
  for (size_t b = 0; b < model_->blocks_.size(); ++b) {
    const nn::Block& block = model_->blocks_[b];
    nn::LayerNorm::Cache lc;
    const Mat a = block.ln1.Forward(x, &lc);
    keys_[b].row(length_) = block.self_attn.k.Forward(a);
    values_[b].row(length_) = block.self_attn.v.Forward(a);
    const RowVec q = block.self_attn.q.Forward(a);
    x += block.self_attn.o.Forward(
        AttendRow(q, keys_[b], values_[b], length_ + 1, block.self_attn.heads));
    if (block.has_cross) {
      const Mat ac = block.ln_cross.Forward(x, &lc);
      const RowVec qc = block.cross_attn.q.Forward(ac);
      x += block.cross_attn.o.Forward(AttendRow(qc, memory_keys_[b], memory_values_[b],
                                                static_cast<int>(memory_keys_[b].rows()),
                                                block.cross_attn.heads));
    }
    const Mat a2 = block.ln2.Forward(x, &lc);
    nn::Mlp::Cache mc;
    x += block.mlp.Forward(a2, &mc);
  }
  ++length_;
  nn::LayerNorm::Cache lc;
  return model_->ln_f_.Forward(x, &lc);
}

// -------------------------------------------------------------------------- checkpoint

void Model::Save(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kMagic, sizeof(kMagic));
  WritePod<uint32_t>(os, kCheckpointVersion);
  const std::string cfg = config_.ToJson().dump();
  WritePod<uint64_t>(os, cfg.size());
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  WritePod<uint32_t>(os, static_cast<uint32_t>(store_.all().size()));
  for (const auto& p : store_.all()) {
    WritePod<uint32_t>(os, static_cast<uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    WritePod<uint32_t>(os, static_cast<uint32_t>(p->value.rows()));
    WritePod<uint32_t>(os, static_cast<uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      WritePod<float>(os, static_cast<float>(p->value.data()[i]));
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::unique_ptr<Model> Model::Load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": not a checkpoint");
  }
  const uint32_t version = ReadPod<uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t cfg_len = ReadPod<uint64_t>(is);
  std::string cfg(cfg_len, '\0');
  is.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
  auto model = std::make_unique<Model>(ModelConfig::FromJson(nlohmann::json::parse(cfg)));
  const uint32_t count = ReadPod<uint32_t>(is);
  if (count != model->store_.all().size()) throw std::runtime_error(path + ": tensor count mismatch");
  for (uint32_t t = 0; t < count; ++t) {
    std::string name(ReadPod<uint32_t>(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    nn::Param* p = model->store_.Find(name);
    if (p == nullptr) throw std::runtime_error(path + ": unknown tensor " + name);
    const uint32_t rows = ReadPod<uint32_t>(is);
    const uint32_t cols = ReadPod<uint32_t>(is);
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error(path + ": shape mismatch for " + name);
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = ReadPod<float>(is);
  }
  return model;
}

// ---------------------------------------------------------------------------- training

std::vector<std::vector<const Example*>> PackLanes(std::span<const Example* const> batch,
                                                   int budget) {
  std::vector<std::vector<const Example*>> lanes;
  int used = 0;
  for (const Example* e : batch) {
    if (lanes.empty() || used + e->size() > budget) {
      lanes.emplace_back();
      used = 0;
    }
    lanes.back().push_back(e);
    used += e->size();
  }
  return lanes;
}

Trainer::Trainer(Model& model, uint64_t seed) : model_(&model), rng_(seed) {}

double Trainer::Step(std::span<const Example* const> batch, int lane_tokens, double* grad_norm) {
  const ModelConfig& cfg = model_->config();
  int predicted = 0;
  for (const Example* e : batch) {
    if (e->size() > cfg.max_positions) {
      throw std::invalid_argument("example of " + std::to_string(e->size()) +
                                  " tokens exceeds max_positions");
    }
    predicted += e->num_predicted();
  }
  if (predicted == 0) throw std::invalid_argument("batch has no predicted tokens");
  nn::ParamStore& store = model_->params();
  store.ZeroGrad();
  const int budget = lane_tokens > 0 ? lane_tokens : cfg.max_positions;
  double nll = 0.0;
  size_t lane_index = 0;
  for (const auto& lane : PackLanes(batch, budget)) {
    Model::RunOptions opts;
    opts.backward = true;
    opts.grad_scale = 1.0 / predicted;
    opts.dropout_rng = &rng_;
    const double lane_nll = model_->Run(lane, opts);
    if (!std::isfinite(lane_nll)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << adam_.steps() + 1 << " in lane " << lane_index << " ("
          << lane.size() << " examples)";
      throw std::runtime_error(msg.str());
    }
    nll += lane_nll;
    ++lane_index;
  }
  const double norm = store.GradNorm();
  if (!std::isfinite(norm)) {
    throw std::runtime_error("non-finite gradient norm at step " + std::to_string(adam_.steps() + 1));
  }
  if (grad_norm) *grad_norm = norm;
  if (norm > cfg.clip_norm) store.ScaleGrad(cfg.clip_norm / norm);
  adam_.Step(store, cfg.learning_rate);
  return nll / kLn2 / predicted;
}

TrainStats Train(Model& model, const std::vector<Example>& corpus, const TrainOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  Trainer trainer(model, options.seed);
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<const Example*> order;
  for (const Example& e : corpus) order.push_back(&e);
  size_t cursor = order.size();
  TrainStats stats;
  const size_t batch = std::max(1, options.batch_size);
  for (int step = 1; step <= options.steps; ++step) {
    std::vector<const Example*> chunk;
    while (chunk.size() < std::min(batch, order.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      chunk.push_back(order[cursor++]);
    }
    double norm = 0.0;
    stats.last_bits_per_token = trainer.Step(chunk, options.lane_tokens, &norm);
    stats.steps = step;
    if (options.on_step && !options.on_step(step, stats.last_bits_per_token, norm)) break;
  }
  return stats;
}

double CorpusBitsPerToken(Model& model, const std::vector<Example>& corpus) {
  std::vector<const Example*> all;
  int predicted = 0;
  for (const Example& e : corpus) {
    all.push_back(&e);
    predicted += e.num_predicted();
  }
  double nll = 0.0;
  for (const auto& lane : PackLanes(all, model.config().max_positions)) nll += model.Run(lane, {});
  return predicted > 0 ? nll / kLn2 / predicted : 0.0;
}

}  // namespace sketchgen
