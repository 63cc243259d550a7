/*!
 * \file src/python/module.cc
 * \brief Python bindings. Sketches cross the boundary as JSON text.
 */
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <random>
#include <string>
#include <tuple>
#include <vector>

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

namespace py = pybind11;
using namespace sketchgen;

namespace {

using TokenTuple = std::tuple<int64_t, double, bool>;

const TokenGroup& GroupByName(const std::string& name) {
  const int g = GroupIndex(name);
  if (g < 0) throw py::value_error("unknown token group: " + name);
  return TokenGroups()[g];
}

py::dict ReportDict(const SolveReport& r) {
  py::dict d;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["initial_max_residual"] = r.initial_max_residual;
  d["max_residual"] = r.max_residual;
  d["num_residuals"] = r.num_residuals;
  d["error"] = r.error;
  return d;
}

std::vector<Sketch> ParseAll(const std::vector<std::string>& texts) {
  std::vector<Sketch> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(ParseSketchJson(t));
  return out;
}

class PyModel {
 public:
  explicit PyModel(const std::string& config_json)
      : model_(std::make_unique<Model>(ModelConfig::FromJson(nlohmann::json::parse(config_json)))) {}
  explicit PyModel(std::unique_ptr<Model> m) : model_(std::move(m)) {}

  std::string config() const { return model_->config().ToJson().dump(); }

  double NllBits(const std::string& sketch) {
    const Sketch s = ParseSketchJson(sketch);
    const auto examples = BuildExamples({s}, model_->config());
    return model_->NllBits(examples[0]);
  }

  std::vector<double> Train(const std::vector<std::string>& corpus, int steps, int batch_size,
                            uint64_t seed) {
    const auto examples = BuildExamples(ParseAll(corpus), model_->config());
    std::vector<double> curve;
    TrainOptions o;
    o.steps = steps;
    o.batch_size = batch_size;
    o.seed = seed;
    o.on_step = [&](int, double bits, double) {
      curve.push_back(bits);
      return true;
    };
    {
      py::gil_scoped_release release;
      sketchgen::Train(*model_, examples, o);
    }
    return curve;
  }

  py::dict Sample(uint64_t seed, double top_p, int max_tokens) const {
    SampleOptions o;
    o.seed = seed;
    o.top_p = top_p;
    o.max_tokens = max_tokens;
    const SampleResult r = sketchgen::Sample(*model_, o);
    py::dict d;
    d["sketch"] = DumpSketchJson(r.sketch);
    d["valid"] = r.valid;
    d["truncated"] = r.truncated;
    d["error"] = r.error;
    d["num_tokens"] = model_->config().representation == Representation::kTriplet
                          ? r.triplets.size()
                          : r.bytes.size();
    return d;
  }

  void Save(const std::string& path) const { model_->Save(path); }

 private:
  std::unique_ptr<Model> model_;
};

}  // namespace

PYBIND11_MODULE(_sketchgen, m) {
  m.doc() = "Sketch tokenization, wire codec, models, geometry and dataset tools.";

  py::register_exception<InvalidSketchError>(m, "InvalidSketchError", PyExc_ValueError);
  py::register_exception<JsonFormatError>(m, "JsonFormatError", PyExc_ValueError);
  py::register_exception<WireParseError>(m, "WireParseError", PyExc_ValueError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);

  m.attr("NUM_BINS") = kNumBins;

  m.def("schema", [] { return DumpSchema(BuiltinSketchSchema()); });
  m.def("token_groups", [] {
    py::list out;
    for (const TokenGroup& g : TokenGroups()) {
      py::dict d;
      d["name"] = g.name;
      d["pattern"] = g.pattern;
      d["continuous"] = g.continuous;
      d["cardinality"] = g.cardinality;
      d["lo"] = g.lo;
      d["hi"] = g.hi;
      out.append(d);
    }
    return out;
  });
  m.def("quantize", [](double x, const std::string& group) { return Quantize(x, GroupByName(group)); },
        py::arg("x"), py::arg("group"));
  m.def("dequantize",
        [](int k, const std::string& group) { return Dequantize(k, GroupByName(group)); },
        py::arg("k"), py::arg("group"));

  m.def("validate", [](const std::string& sketch, bool concatenated) {
    std::vector<std::string> out;
    for (const Violation& v : ValidateSketch(ParseSketchJson(sketch),
                                             concatenated ? Ordering::kConcatenated
                                                          : Ordering::kInterleaved)) {
      out.push_back("object " + std::to_string(v.object_index) + ": " + v.field_path + ": " +
                    v.message);
    }
    return out;
  }, py::arg("sketch"), py::arg("concatenated") = false);

  m.def("encode", [](const std::string& sketch) {
    std::vector<py::dict> out;
    for (const Token& t : Encode(ParseSketchJson(sketch))) {
      py::dict d;
      d["d"] = t.t.d;
      d["c"] = t.t.c;
      d["f"] = t.t.f;
      d["field"] = t.ctx.field_id;
      d["n"] = t.ctx.n;
      d["m"] = t.ctx.m;
      d["referrable"] = t.ctx.is_referrable;
      out.push_back(d);
    }
    return out;
  });
  m.def("decode", [](const std::vector<TokenTuple>& tokens) {
    std::vector<Triplet> triplets;
    for (const auto& [d, c, f] : tokens) triplets.push_back({d, c, f});
    return DumpSketchJson(Decode(triplets));
  });

  m.def("serialize", [](const std::string& sketch) {
    const Bytes b = Serialize(ParseSketchJson(sketch));
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });
  m.def("parse", [](const py::bytes& data) {
    const std::string raw = data;
    const std::vector<uint8_t> b(raw.begin(), raw.end());
    return DumpSketchJson(Parse(b));
  });

  m.def("random_sketch", [](uint64_t seed, int min_entities, int max_entities, bool quantized) {
    std::mt19937_64 rng(seed);
    RandomSketchOptions o;
    o.min_entities = min_entities;
    o.max_entities = max_entities;
    o.quantized = quantized;
    return DumpSketchJson(RandomSketch(rng, o));
  }, py::arg("seed"), py::arg("min_entities") = 1, py::arg("max_entities") = 8,
        py::arg("quantized") = false);

  m.def("uniform_baseline_nll", [](const std::string& sketch, const std::string& repr) {
    return UniformBaselineNll(ParseSketchJson(sketch), ParseRepresentation(repr));
  }, py::arg("sketch"), py::arg("representation") = "triplet");

  m.def("solve", [](const std::string& sketch, double tol, int max_iter) {
    const SolveResult r = Solve(ParseSketchJson(sketch), tol, max_iter);
    return py::make_tuple(DumpSketchJson(r.sketch), ReportDict(r.report));
  }, py::arg("sketch"), py::arg("tol") = 1e-9, py::arg("max_iter") = 100);
  m.def("normalize", [](const std::string& sketch) {
    return DumpSketchJson(Normalize(ParseSketchJson(sketch)));
  });
  m.def("render", [](const std::string& sketch, int resolution) {
    const Bitmap b = Render(ParseSketchJson(sketch), resolution);
    py::array_t<uint8_t> out({b.height, b.width});
    std::copy(b.pixels.begin(), b.pixels.end(), out.mutable_data());
    return out;
  }, py::arg("sketch"), py::arg("resolution") = 128);
  m.def("render_svg", [](const std::string& sketch, int size) {
    return RenderSvg(ParseSketchJson(sketch), size);
  }, py::arg("sketch"), py::arg("size") = 256);

  m.def("dedup", [](const std::vector<std::string>& corpus, double threshold, int resolution) {
    DedupOptions o;
    o.threshold = threshold;
    o.resolution = resolution;
    const auto corpus_sketches = ParseAll(corpus);
    DedupResult r;
    {
      py::gil_scoped_release release;
      r = Dedup(corpus_sketches, o);
    }
    return py::make_tuple(r.representatives, r.cluster);
  }, py::arg("corpus"), py::arg("threshold") = 0.1, py::arg("resolution") = 128);

  m.def("nucleus_probs", &NucleusProbs, py::arg("probs"), py::arg("top_p"));

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("config_json") = "{}")
      .def_property_readonly("config", &PyModel::config)
      .def("nll_bits", &PyModel::NllBits, py::arg("sketch"))
      .def("train", &PyModel::Train, py::arg("corpus"), py::arg("steps"),
           py::arg("batch_size") = 8, py::arg("seed") = 0)
      .def("sample", &PyModel::Sample, py::arg("seed") = 0, py::arg("top_p") = 0.9,
           py::arg("max_tokens") = 1024)
      .def("save", &PyModel::Save, py::arg("path"))
      .def_static("load", [](const std::string& path) {
        return std::make_unique<PyModel>(Model::Load(path));
      }, py::arg("path"));
}
