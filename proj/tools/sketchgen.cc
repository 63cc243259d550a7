/*!
 * \file tools/sketchgen.cc
 * \brief Command-line interface. Exit codes: 0 success, 1 usage error, 2 data error.
 */
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include "sketchgen/generator.h"
#include "sketchgen/geometry.h"
#include "sketchgen/model.h"
#include "sketchgen/pipeline.h"
#include "sketchgen/schema.h"
#include "sketchgen/sketch_json.h"
#include "sketchgen/synth.h"
#include "sketchgen/tokens.h"
#include "sketchgen/triplet.h"
#include "sketchgen/wire.h"

namespace sketchgen {
namespace {

using nlohmann::json;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int DefaultWorkers() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

std::string ReadAll(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

/*! Writes to `path`, or stdout for "" / "-". */
void WriteAll(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << data;
}

Sketch ReadSketch(const std::string& path) { return ParseSketchJson(ReadAll(path)); }

std::vector<Sketch> ReadCorpus(const std::string& path) {
  std::istringstream is(ReadAll(path));
  std::vector<Sketch> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (j.is_object() && j.contains("sketch")) j = j.at("sketch");
      out.push_back(SketchFromJson(j));
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string CorpusText(const std::vector<Sketch>& corpus) {
  std::ostringstream os;
  WriteJsonLines(os, corpus);
  return os.str();
}

Ordering ParseOrdering(const std::string& s) {
  if (s == "interleaved") return Ordering::kInterleaved;
  if (s == "concatenated") return Ordering::kConcatenated;
  throw CLI::ValidationError("ordering", "expected interleaved or concatenated");
}

std::vector<double> ReadImage(const std::string& path, int size) {
  std::istringstream is(ReadAll(path));
  const Bitmap b = ReadPgm(is);
  if (b.width != size || b.height != size) {
    throw DataError(path + ": image is " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                    ", model expects " + std::to_string(size) + "x" + std::to_string(size));
  }
  return ImageFromBitmap(b);
}

/*! Distinct, reproducible seed for sample `i` of a run seeded with `seed`. */
uint64_t StreamSeed(uint64_t seed, uint64_t i) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

json SolveReportJson(const SolveReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"initial_max_residual", r.initial_max_residual},
          {"max_residual", r.max_residual},
          {"half_squared_norm", r.half_squared_norm},
          {"num_residuals", r.num_residuals},
          {"error", r.error}};
}

// ------------------------------------------------------------------------------ commands

struct Common {
  bool json = false;
  std::string output;
};

void AddOutput(CLI::App* app, Common* c) {
  app->add_option("-o,--output", c->output, "Output file (default: stdout)");
}

int CmdSchema(const Common& c) {
  if (c.json) {
    json groups = json::array();
    for (const TokenGroup& g : TokenGroups()) {
      groups.push_back({{"name", g.name}, {"cardinality", g.cardinality}});
    }
    json out = {{"schema", DumpSchema(BuiltinSketchSchema())}, {"fields", FieldIds()}, {"groups", groups}};
    WriteAll(c.output, out.dump(2) + "\n");
  } else {
    WriteAll(c.output, DumpSchema(BuiltinSketchSchema()));
  }
  return 0;
}

int CmdValidate(const Common& c, const std::string& input, const std::string& ordering) {
  const ValidationReport report = ValidateSketch(ReadSketch(input), ParseOrdering(ordering));
  if (c.json) {
    json v = json::array();
    for (const Violation& x : report) v.push_back({{"object", x.object_index}, {"message", x.message}});
    WriteAll(c.output, json{{"valid", report.empty()}, {"violations", v}}.dump() + "\n");
  } else if (report.empty()) {
    WriteAll(c.output, "valid\n");
  }
  if (!report.empty()) {
    std::cerr << FormatReport(report);
    return 2;
  }
  return 0;
}

int CmdEncode(const Common& c, const std::string& input) {
  const std::vector<Token> tokens = Encode(ReadSketch(input));
  if (c.json) {
    json out = json::array();
    for (const Token& t : tokens) {
      if (t.ctx.is_referrable) continue;
      out.push_back({{"d", t.t.d}, {"c", t.t.c}, {"f", t.t.f}, {"field", t.ctx.field_id},
                     {"n", t.ctx.n}, {"m", t.ctx.m}});
    }
    WriteAll(c.output, out.dump() + "\n");
    return 0;
  }
  std::ostringstream os;
  WriteTokenText(os, tokens);
  WriteAll(c.output, os.str());
  return 0;
}

int CmdDecode(const Common& c, const std::string& input) {
  std::istringstream is(ReadAll(input));
  const Sketch s = Decode(ReadTokenText(is));
  WriteAll(c.output, DumpSketchJson(s, c.json ? 2 : -1) + "\n");
  return 0;
}

int CmdSerialize(const Common& c, const std::string& input) {
  const Bytes b = Serialize(ReadSketch(input));
  WriteAll(c.output, std::string(b.begin(), b.end()));
  return 0;
}

int CmdParse(const Common& c, const std::string& input) {
  const std::string data = ReadAll(input);
  const Sketch s = Parse(Bytes(data.begin(), data.end()));
  WriteAll(c.output, DumpSketchJson(s, c.json ? 2 : -1) + "\n");
  return 0;
}

int CmdReorder(const Common& c, const std::string& input, const std::string& mode) {
  WriteAll(c.output, DumpSketchJson(Reorder(ReadSketch(input), ParseOrdering(mode)), c.json ? 2 : -1) + "\n");
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string corpus;
  std::string out_dir = "run";
  std::string representation;
  int steps = -1;
  int batch = -1;
  int lane_tokens = -1;
  int checkpoint_every = 0;
  double lr = -1.0;
  double dropout = -1.0;
  double target_bits = 0.0;
  bool conditional = false;
  uint64_t seed = 0;
  bool seed_set = false;
};

int CmdTrain(const Common& c, const TrainArgs& a) {
  json cfg = json::object();
  if (!a.config.empty()) cfg = json::parse(ReadAll(a.config));
  json model_cfg = cfg.value("model", json::object());
  if (!a.representation.empty()) model_cfg["representation"] = a.representation;
  if (a.lr > 0.0) model_cfg["learning_rate"] = a.lr;
  if (a.dropout >= 0.0) model_cfg["dropout"] = a.dropout;
  if (a.conditional) model_cfg["image"]["enabled"] = true;
  const ModelConfig config = ModelConfig::FromJson(model_cfg);
  const json train_cfg = cfg.value("train", json::object());
  TrainOptions opts;
  opts.steps = a.steps > 0 ? a.steps : train_cfg.value("steps", opts.steps);
  opts.batch_size = a.batch > 0 ? a.batch : train_cfg.value("batch_size", opts.batch_size);
  opts.lane_tokens = a.lane_tokens >= 0 ? a.lane_tokens : train_cfg.value("lane_tokens", opts.lane_tokens);
  opts.seed = a.seed_set ? a.seed : train_cfg.value("seed", opts.seed);
  const int every = a.checkpoint_every > 0 ? a.checkpoint_every : train_cfg.value("checkpoint_every", 0);
  const double target = a.target_bits > 0.0 ? a.target_bits : train_cfg.value("target_bits", 0.0);

  const std::vector<Sketch> corpus = ReadCorpus(a.corpus);
  if (corpus.empty()) throw DataError("empty corpus");
  const std::vector<Example> examples = BuildExamples(corpus, config);
  std::filesystem::create_directories(a.out_dir);
  const std::string dir = a.out_dir + "/";
  std::ofstream log(dir + "loss.csv");
  log << "step,bits_per_token,grad_norm\n";
  Model model(config);
  opts.on_step = [&](int step, double bits, double grad_norm) {
    log << step << ',' << bits << ',' << grad_norm << '\n';
    if (every > 0 && step % every == 0) model.Save(dir + "checkpoint_" + std::to_string(step) + ".bin");
    if (step % 100 == 0) std::cerr << "step " << step << " bits/token " << bits << '\n';
    return !(target > 0.0 && bits < target);
  };
  const TrainStats stats = Train(model, examples, opts);
  model.Save(dir + "checkpoint.bin");
  const double corpus_bits = CorpusBitsPerToken(model, examples);
  const json summary = {{"steps", stats.steps},
                        {"last_batch_bits_per_token", stats.last_bits_per_token},
                        {"corpus_bits_per_token", corpus_bits},
                        {"checkpoint", dir + "checkpoint.bin"},
                        {"config", config.ToJson()}};
  std::ofstream(dir + "summary.json") << summary.dump(2) << '\n';
  if (c.json) {
    WriteAll(c.output, summary.dump() + "\n");
  } else {
    std::cerr << "trained " << stats.steps << " steps, corpus bits/token " << corpus_bits << '\n';
  }
  return 0;
}

int CmdEval(const Common& c, const std::string& input, const std::string& checkpoint, bool uniform,
            const std::string& repr) {
  if (uniform == !checkpoint.empty()) throw CLI::ValidationError("eval", "give exactly one of --uniform or --checkpoint");
  const std::vector<Sketch> corpus = ReadCorpus(input);
  std::unique_ptr<Model> model;
  Representation r = ParseRepresentation(repr);
  if (!uniform) {
    model = Model::Load(checkpoint);
    r = model->config().representation;
  }
  std::vector<double> bits(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (uniform) {
      bits[i] = UniformBaselineNll(corpus[i], r);
    } else {
      Example e = MakeExample(corpus[i], r);
      if (model->config().image.enabled) {
        e.image = ImageFromBitmap(Render(corpus[i], model->config().image.image_size));
      }
      bits[i] = model->NllBits(e);
    }
  }
  double total = 0.0;
  size_t objects = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    total += bits[i];
    objects += corpus[i].objects.size();
  }
  const double per_sketch = corpus.empty() ? 0.0 : total / static_cast<double>(corpus.size());
  const double per_object = objects == 0 ? 0.0 : total / static_cast<double>(objects);
  std::ostringstream os;
  if (c.json) {
    json per = json::array();
    for (size_t i = 0; i < corpus.size(); ++i) per.push_back({{"objects", corpus[i].objects.size()}, {"bits", bits[i]}});
    os << json{{"representation", RepresentationName(r)},
               {"sketches", corpus.size()},
               {"bits_per_sketch", per_sketch},
               {"bits_per_object", per_object},
               {"per_sketch", per}}
              .dump()
       << '\n';
  } else {
    os.precision(17);
    os << "index,objects,bits\n";
    for (size_t i = 0; i < corpus.size(); ++i) os << i << ',' << corpus[i].objects.size() << ',' << bits[i] << '\n';
    std::cerr << "bits/sketch " << per_sketch << "  bits/object " << per_object << '\n';
  }
  WriteAll(c.output, os.str());
  return 0;
}

struct SampleArgs {
  std::string checkpoint;
  std::string image;
  std::string svg_dir;
  double top_p = 0.9;
  int n = 1;
  int max_tokens = 1024;
  uint64_t seed = 0;
  int workers = DefaultWorkers();
};

int CmdSample(const Common& c, const SampleArgs& a) {
  const std::unique_ptr<Model> model = Model::Load(a.checkpoint);
  std::vector<double> image;
  if (model->config().image.enabled) {
    if (a.image.empty()) throw DataError("conditional model needs --image");
    image = ReadImage(a.image, model->config().image.image_size);
  }
  std::vector<SampleResult> results(static_cast<size_t>(a.n));
  ParallelFor(results.size(), a.workers, [&](size_t i) {
    SampleOptions o;
    o.top_p = a.top_p;
    o.max_tokens = a.max_tokens;
    o.seed = StreamSeed(a.seed, i);
    o.image = image.empty() ? nullptr : &image;
    results[i] = Sample(*model, o);
  });
  if (!a.svg_dir.empty()) std::filesystem::create_directories(a.svg_dir);
  std::ostringstream os;
  for (size_t i = 0; i < results.size(); ++i) {
    const SampleResult& r = results[i];
    if (c.json) {
      json rec = {{"index", i}, {"truncated", r.truncated}, {"valid", r.valid},
                  {"sketch", SketchToJson(r.sketch)}};
      if (!r.error.empty()) rec["error"] = r.error;
      os << rec.dump() << '\n';
    } else {
      os << DumpSketchJson(r.sketch) << '\n';
    }
    if (!a.svg_dir.empty()) {
      std::ofstream(a.svg_dir + "/sample_" + std::to_string(i) + ".svg") << RenderSvg(r.sketch);
    }
  }
  WriteAll(c.output, os.str());
  return 0;
}

int CmdGuidedSearch(const Common& c, const std::string& checkpoint, const std::string& image_path,
                    const GuidedSearchOptions& opts) {
  const std::unique_ptr<Model> model = Model::Load(checkpoint);
  if (!model->config().image.enabled) throw DataError("guided search needs a conditional checkpoint");
  const int size = model->config().image.image_size;
  const Bitmap target = BitmapFromImage(ReadImage(image_path, size), size);
  const GuidedSearchResult r = GuidedSearch(*model, target, opts);
  if (c.json) {
    WriteAll(c.output, json{{"sketch", SketchToJson(r.sketch)},
                            {"smoothed_l2", r.smoothed_l2},
                            {"sample_index", r.sample_index},
                            {"num_objects", r.num_objects},
                            {"num_tokens", r.num_tokens}}
                               .dump() +
                           "\n");
  } else {
    std::cerr << "smoothed L2 " << r.smoothed_l2 << " objects " << r.num_objects << '\n';
    WriteAll(c.output, DumpSketchJson(r.sketch) + "\n");
  }
  return 0;
}

int CmdSolve(const Common& c, const std::string& input, double tol, int max_iter, bool batch, int workers) {
  std::vector<Sketch> corpus = batch ? ReadCorpus(input) : std::vector<Sketch>{ReadSketch(input)};
  std::vector<SolveResult> results(corpus.size());
  ParallelFor(corpus.size(), workers, [&](size_t i) { results[i] = Solve(corpus[i], tol, max_iter); });
  std::ostringstream os;
  bool all = true;
  for (const SolveResult& r : results) {
    all = all && r.report.converged;
    if (c.json) {
      os << json{{"sketch", SketchToJson(r.sketch)}, {"report", SolveReportJson(r.report)}}.dump() << '\n';
    } else {
      os << DumpSketchJson(r.sketch) << '\n';
      if (!r.report.error.empty()) {
        std::cerr << "not solvable: " << r.report.error << '\n';
      } else {
        std::cerr << (r.report.converged ? "converged" : "not converged") << " after "
                  << r.report.iterations << " iterations, max |r| " << r.report.max_residual << '\n';
      }
    }
  }
  WriteAll(c.output, os.str());
  return all ? 0 : 2;
}

int CmdRender(const Common& c, const std::string& input, int resolution, const std::string& format,
              bool normalize) {
  Sketch s = ReadSketch(input);
  if (normalize) s = Normalize(s);
  if (format == "svg") {
    WriteAll(c.output, RenderSvg(s, resolution));
  } else if (format == "pgm") {
    std::ostringstream os;
    WritePgm(os, Render(s, resolution));
    WriteAll(c.output, os.str());
  } else {
    throw CLI::ValidationError("format", "expected pgm or svg");
  }
  return 0;
}

int CmdIngest(const Common& c, const std::string& input, bool normalize) {
  const IngestOptions opts{normalize};
  IngestResult r;
  if (std::filesystem::is_directory(input)) {
    r = IngestDirectory(input, opts);
  } else {
    std::istringstream is(ReadAll(input));
    r = IngestJsonLines(is, opts);
  }
  for (const IngestIssue& i : r.issues) {
    std::cerr << "record " << i.record << (i.rejected ? " rejected: " : " dropped constraint: ") << i.reason << '\n';
  }
  std::cerr << r.sketches.size() << " of " << r.records << " records accepted\n";
  WriteAll(c.output, CorpusText(r.sketches));
  return 0;
}

int CmdFilter(const Common& c, const std::string& input, const FilterOptions& opts) {
  const FilterResult r = FilterCorpus(ReadCorpus(input), opts);
  std::cerr << "kept " << r.kept.size() << ", too few " << r.too_few << ", too many " << r.too_many
            << ", rectangles " << r.rectangles << '\n';
  WriteAll(c.output, CorpusText(r.kept));
  return 0;
}

int CmdDedup(const Common& c, const std::string& input, const DedupOptions& opts) {
  const std::vector<Sketch> corpus = ReadCorpus(input);
  const DedupResult r = Dedup(corpus, opts);
  std::vector<Sketch> kept;
  for (size_t i : r.representatives) kept.push_back(corpus[i]);
  std::cerr << corpus.size() << " sketches, " << r.bins << " bins, " << kept.size() << " representatives\n";
  WriteAll(c.output, CorpusText(kept));
  return 0;
}

int CmdStats(const Common& c, const std::string& input, bool traces, const std::string& svg_dir) {
  CorpusStats st;
  if (traces) {
    std::istringstream is(ReadAll(input));
    std::vector<SampleResult> samples;
    std::string line;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      SampleResult r;
      r.valid = j.value("valid", true);
      r.truncated = j.value("truncated", false);
      if (r.valid) r.sketch = SketchFromJson(j.at("sketch"));
      samples.push_back(std::move(r));
    }
    st = SampleStats(samples);
  } else {
    st = ComputeStats(ReadCorpus(input));
  }
  std::ostringstream os;
  if (c.json) {
    json j = {{"sketches", st.sketches}};
    for (const auto& [name, h] : st.tables()) {
      json t = json::object();
      for (const auto& [v, n] : *h) t[std::to_string(v)] = n;
      j[name] = t;
    }
    if (st.samples > 0) {
      j["samples"] = st.samples;
      j["invalid_samples"] = st.invalid_samples;
      j["invalid_rate"] = st.invalid_rate();
    }
    os << j.dump() << '\n';
  } else {
    WriteStatsCsv(os, st);
  }
  if (!svg_dir.empty()) {
    std::filesystem::create_directories(svg_dir);
    for (const auto& [name, h] : st.tables()) std::ofstream(svg_dir + "/" + name + ".svg") << HistogramSvg(name, *h);
  }
  WriteAll(c.output, os.str());
  return 0;
}

int CmdSplit(const std::string& input, const std::string& prefix, const SplitOptions& opts) {
  const std::vector<Sketch> corpus = ReadCorpus(input);
  const Split s = SplitCorpus(corpus.size(), opts);
  for (const auto& [name, idx] : {std::pair{"train", &s.train}, {"valid", &s.valid}, {"test", &s.test}}) {
    std::vector<Sketch> part;
    for (size_t i : *idx) part.push_back(corpus[i]);
    WriteAll(prefix + name + ".jsonl", CorpusText(part));
    std::cerr << name << ": " << part.size() << '\n';
  }
  return 0;
}

int CmdSynth(const Common& c, int n, uint64_t seed, const RandomSketchOptions& opts, bool normalize) {
  std::mt19937_64 rng(seed);
  std::vector<Sketch> corpus;
  while (static_cast<int>(corpus.size()) < n) {
    Sketch s = RandomSketch(rng, opts);
    if (normalize) {
      try {
        s = Normalize(s);
      } catch (const GeometryError&) {
        continue;
      }
    }
    corpus.push_back(std::move(s));
  }
  WriteAll(c.output, CorpusText(corpus));
  return 0;
}

int Run(int argc, char** argv) {
  CLI::App app{"Sketch generation toolkit: codecs, models, sampling, geometry and corpus tools"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  Common common;
  app.add_flag("--json", common.json, "Machine-readable output");
  std::string input;
  std::function<int()> action;

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    AddOutput(s, &common);
    s->add_flag("--json", common.json, "Machine-readable output");
    return s;
  };
  auto positional = [&](CLI::App* s, const char* what) {
    s->add_option("input", input, what)->required();
  };

  CLI::App* schema = sub("schema", "Print the message schema");
  schema->callback([&] { action = [&] { return CmdSchema(common); }; });

  std::string ordering = "interleaved";
  CLI::App* validate = sub("validate", "Check a JSON sketch; violations on stderr, exit 2 if invalid");
  positional(validate, "Sketch JSON file ('-' for stdin)");
  validate->add_option("--ordering", ordering, "Pointer rule: interleaved or concatenated")->capture_default_str();
  validate->callback([&] { action = [&] { return CmdValidate(common, input, ordering); }; });

  CLI::App* encode = sub("encode", "JSON sketch to triplet token text");
  positional(encode, "Sketch JSON file");
  encode->callback([&] { action = [&] { return CmdEncode(common, input); }; });

  CLI::App* decode = sub("decode", "Triplet token text to JSON sketch");
  positional(decode, "Token text file");
  decode->callback([&] { action = [&] { return CmdDecode(common, input); }; });

  CLI::App* serialize = sub("serialize", "JSON sketch to protobuf wire bytes");
  positional(serialize, "Sketch JSON file");
  serialize->callback([&] { action = [&] { return CmdSerialize(common, input); }; });

  CLI::App* parse = sub("parse", "Protobuf wire bytes to JSON sketch");
  positional(parse, "Binary sketch file");
  parse->callback([&] { action = [&] { return CmdParse(common, input); }; });

  std::string mode = "interleaved";
  CLI::App* reorder = sub("reorder", "Reorder objects");
  positional(reorder, "Sketch JSON file");
  reorder->add_option("--mode", mode, "interleaved or concatenated")->capture_default_str();
  reorder->callback([&] { action = [&] { return CmdReorder(common, input, mode); }; });

  TrainArgs ta;
  CLI::App* train = sub("train", "Train a model; writes checkpoints, loss.csv and summary.json");
  train->add_option("--corpus", ta.corpus, "Training corpus (JSONL)")->required();
  train->add_option("--config", ta.config, "JSON file with \"model\" and \"train\" sections");
  train->add_option("--out", ta.out_dir, "Output directory")->capture_default_str();
  train->add_option("--repr", ta.representation, "triplet or byte (default from config: triplet)");
  train->add_option("--steps", ta.steps, "Optimizer steps (default 1000)");
  train->add_option("--batch", ta.batch, "Examples per step (default 8)");
  train->add_option("--lane-tokens", ta.lane_tokens, "Positions per packed lane (default max_positions)");
  train->add_option("--lr", ta.lr, "Learning rate (default 1e-4)");
  train->add_option("--dropout", ta.dropout, "Dropout rate (default 0.1)");
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Extra checkpoint period in steps");
  train->add_option("--target-bits", ta.target_bits, "Stop once a batch is below this bits/token");
  train->add_flag("--conditional", ta.conditional, "Condition on 64x64 renders");
  train->add_option("--seed", ta.seed, "Data order and dropout seed (default 0)")->each([&](const std::string&) { ta.seed_set = true; });
  train->callback([&] { action = [&] { return CmdTrain(common, ta); }; });

  std::string checkpoint, repr = "triplet";
  bool uniform = false;
  CLI::App* eval = sub("eval", "Bits per sketch and per object on a corpus");
  positional(eval, "Corpus (JSONL)");
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint");
  eval->add_flag("--uniform", uniform, "Analytic uniform baseline instead of a model");
  eval->add_option("--repr", repr, "Representation for --uniform")->capture_default_str();
  eval->callback([&] { action = [&] { return CmdEval(common, input, checkpoint, uniform, repr); }; });

  SampleArgs sa;
  CLI::App* sample = sub("sample", "Draw sketches from a checkpoint (JSONL)");
  sample->add_option("--checkpoint", sa.checkpoint, "Model checkpoint")->required();
  sample->add_option("--top-p", sa.top_p, "Nucleus mass")->capture_default_str()->check(CLI::Range(1e-9, 1.0));
  sample->add_option("--n", sa.n, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
  sample->add_option("--max-tokens", sa.max_tokens, "Token budget per sample")->capture_default_str();
  sample->add_option("--seed", sa.seed, "Seed")->capture_default_str();
  sample->add_option("--image", sa.image, "PGM conditioning image");
  sample->add_option("--svg-dir", sa.svg_dir, "Also write one SVG per sample");
  sample->add_option("--workers", sa.workers, "Worker threads")->capture_default_str();
  sample->callback([&] { action = [&] { return CmdSample(common, sa); }; });

  GuidedSearchOptions go;
  std::string image;
  CLI::App* guided = sub("guided-search", "Reconstruct a sketch from a PGM image");
  guided->add_option("--checkpoint", checkpoint, "Conditional checkpoint")->required();
  guided->add_option("--image", image, "PGM image at the model's resolution")->required();
  guided->add_option("--n-samples", go.n_samples, "Sampled traces")->capture_default_str();
  guided->add_option("--max-tokens", go.max_tokens, "Token budget per trace")->capture_default_str();
  guided->add_option("--sigma", go.sigma, "Gaussian sigma in pixels")->capture_default_str();
  guided->add_option("--top-p", go.top_p, "Nucleus mass")->capture_default_str();
  guided->add_option("--seed", go.seed, "Seed")->capture_default_str();
  guided->callback([&] { action = [&] { return CmdGuidedSearch(common, checkpoint, image, go); }; });

  double tol = 1e-9;
  int max_iter = 100, workers = DefaultWorkers();
  bool batch = false;
  CLI::App* solve = sub("solve", "Levenberg-Marquardt constraint solve; exit 2 if not converged");
  positional(solve, "Sketch JSON (or JSONL with --batch)");
  solve->add_option("--tol", tol, "Max-norm tolerance")->capture_default_str();
  solve->add_option("--max-iter", max_iter, "Iteration limit")->capture_default_str();
  solve->add_flag("--batch", batch, "Input is JSONL");
  solve->add_option("--workers", workers, "Worker threads")->capture_default_str();
  solve->callback([&] { action = [&] { return CmdSolve(common, input, tol, max_iter, batch, workers); }; });

  int resolution = 128;
  std::string format = "pgm";
  bool normalize = false;
  CLI::App* render = sub("render", "Render a sketch to PGM or SVG");
  positional(render, "Sketch JSON file");
  render->add_option("--resolution", resolution, "Pixels per side")->capture_default_str();
  render->add_option("--format", format, "pgm or svg")->capture_default_str();
  render->add_flag("--normalize", normalize, "Normalize to [-1,1]^2 first");
  render->callback([&] { action = [&] { return CmdRender(common, input, resolution, format, normalize); }; });

  bool no_normalize = false;
  CLI::App* ingest = sub("ingest", "JSONL or directory of .sketchpb to a clean JSONL corpus");
  positional(ingest, "JSONL file or directory");
  ingest->add_flag("--no-normalize", no_normalize, "Keep original coordinates");
  ingest->callback([&] { action = [&] { return CmdIngest(common, input, !no_normalize); }; });

  FilterOptions fo;
  CLI::App* filter = sub("filter", "Drop sketches by entity count and axis-aligned rectangles");
  positional(filter, "Corpus (JSONL)");
  filter->add_option("--min-entities", fo.min_entities, "Lower bound")->capture_default_str();
  filter->add_option("--max-entities", fo.max_entities, "Upper bound")->capture_default_str();
  filter->callback([&] { action = [&] { return CmdFilter(common, input, fo); }; });

  DedupOptions dopts;
  dopts.workers = DefaultWorkers();
  CLI::App* dedup = sub("dedup", "Near-duplicate removal by type sequence and render Jaccard distance");
  positional(dedup, "Corpus (JSONL)");
  dedup->add_option("--threshold", dopts.threshold, "Jaccard distance cut")->capture_default_str();
  dedup->add_option("--resolution", dopts.resolution, "Render size")->capture_default_str();
  dedup->add_option("--workers", dopts.workers, "Worker threads")->capture_default_str();
  dedup->callback([&] { action = [&] { return CmdDedup(common, input, dopts); }; });

  bool traces = false;
  std::string svg_dir;
  CLI::App* stats = sub("stats", "Corpus histograms as CSV (or JSON)");
  positional(stats, "Corpus (JSONL) or sample records from `sample --json`");
  stats->add_flag("--traces", traces, "Input holds sample records; adds the invalid-sample rate");
  stats->add_option("--svg-dir", svg_dir, "Also write one SVG bar chart per table");
  stats->callback([&] { action = [&] { return CmdStats(common, input, traces, svg_dir); }; });

  SplitOptions so;
  std::string prefix = "";
  CLI::App* split = sub("split", "Seeded train/valid/test split into <prefix>{train,valid,test}.jsonl");
  positional(split, "Corpus (JSONL)");
  split->add_option("--prefix", prefix, "Output path prefix");
  split->add_option("--valid", so.valid_fraction, "Validation fraction")->capture_default_str();
  split->add_option("--test", so.test_fraction, "Test fraction")->capture_default_str();
  split->add_option("--seed", so.seed, "Shuffle seed")->capture_default_str();
  split->callback([&] { action = [&] { return CmdSplit(input, prefix, so); }; });

  int synth_n = 100;
  uint64_t synth_seed = 0;
  bool synth_normalize = false;
  RandomSketchOptions ro;
  CLI::App* synth = sub("synth", "Seeded random valid sketches (JSONL)");
  synth->add_option("--n", synth_n, "Number of sketches")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth->add_option("--min-entities", ro.min_entities, "Entities lower bound")->capture_default_str();
  synth->add_option("--max-entities", ro.max_entities, "Entities upper bound")->capture_default_str();
  synth->add_flag("--quantized", ro.quantized, "Snap continuous values to bin centers");
  synth->add_flag("--normalize", synth_normalize, "Normalize each sketch");
  synth->callback([&] { action = [&] { return CmdSynth(common, synth_n, synth_seed, ro, synth_normalize); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace
}  // namespace sketchgen

int main(int argc, char** argv) { return sketchgen::Run(argc, argv); }
