/*!
 * \file sketchgen/pipeline.cc
 */
#include "sketchgen/pipeline.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "sketchgen/sketch_json.h"
#include "sketchgen/triplet.h"
#include "sketchgen/wire.h"

namespace sketchgen {

// ------------------------------------------------------------------------------- ingest

namespace {

/*! Entities first, then constraints, both in their original order. */
Sketch EntitiesFirst(const Sketch& s) {
  Sketch out;
  for (const Object& o : s.objects) {
    if (IsEntity(o)) out.objects.push_back(o);
  }
  for (const Object& o : s.objects) {
    if (!IsEntity(o)) out.objects.push_back(o);
  }
  return out;
}

/*! Validates, reorders and normalizes; returns the rejection reason or "". */
std::string Prepare(Sketch* s, const IngestOptions& options) {
  const ValidationReport report = ValidateSketch(*s, Ordering::kConcatenated);
  if (!report.empty()) return "invalid sketch: " + FormatReport(report);
  *s = Reorder(EntitiesFirst(*s), Ordering::kInterleaved);
  if (options.normalize) {
    try {
      *s = Normalize(*s);
    } catch (const GeometryError& e) {
      return std::string("cannot normalize: ") + e.what();
    }
  }
  return "";
}

void Accept(Sketch s, size_t record, const IngestOptions& options, IngestResult* out) {
  const std::string reason = Prepare(&s, options);
  if (!reason.empty()) {
    out->issues.push_back({record, reason, true});
    return;
  }
  out->sketches.push_back(std::move(s));
  out->source.push_back(record);
}

}  // namespace

IngestResult IngestJsonLines(std::istream& is, const IngestOptions& options) {
  IngestResult out;
  std::string line;
  size_t record = 0;
  for (; std::getline(is, line); ++record) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++out.records;
    std::vector<std::string> dropped;
    Sketch s;
    try {
      s = SketchFromJson(nlohmann::json::parse(line), &dropped);
    } catch (const std::exception& e) {
      out.issues.push_back({record, e.what(), true});
      continue;
    }
    for (std::string& d : dropped) out.issues.push_back({record, std::move(d), false});
    Accept(std::move(s), record, options, &out);
  }
  return out;
}

IngestResult IngestDirectory(const std::string& dir, const IngestOptions& options) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sketchpb") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  IngestResult out;
  for (size_t record = 0; record < files.size(); ++record) {
    ++out.records;
    std::ifstream f(files[record], std::ios::binary);
    const Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Sketch s;
    try {
      s = Parse(bytes);
    } catch (const std::exception& e) {
      out.issues.push_back({record, files[record].filename().string() + ": " + e.what(), true});
      continue;
    }
    Accept(std::move(s), record, options, &out);
  }
  return out;
}

void WriteJsonLines(std::ostream& os, const std::vector<Sketch>& corpus) {
  for (const Sketch& s : corpus) os << DumpSketchJson(s) << '\n';
}

// ------------------------------------------------------------------------------- filter

bool IsAxisAlignedRectangle(const Sketch& s, double tol) {
  std::vector<const LineEntity*> lines;
  for (const Object& o : s.objects) {
    if (!IsEntity(o)) continue;
    const auto* l = std::get_if<LineEntity>(&AsEntity(o));
    if (l == nullptr) return false;
    lines.push_back(l);
  }
  if (lines.size() != 4) return false;
  auto near = [tol](Vec2 a, Vec2 b) { return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol; };
  int horizontal = 0, vertical = 0;
  for (const LineEntity* l : lines) {
    const bool h = std::abs(l->start.y - l->end.y) <= tol && std::abs(l->start.x - l->end.x) > tol;
    const bool v = std::abs(l->start.x - l->end.x) <= tol && std::abs(l->start.y - l->end.y) > tol;
    horizontal += h;
    vertical += v;
    if (!h && !v) return false;
  }
  if (horizontal != 2 || vertical != 2) return false;
  // Walk the cycle from line 0, allowing either orientation of every segment.
  std::vector<bool> used(4, false);
  used[0] = true;
  Vec2 first = lines[0]->start, cur = lines[0]->end;
  for (int step = 1; step < 4; ++step) {
    bool advanced = false;
    for (int k = 1; k < 4 && !advanced; ++k) {
      if (used[k]) continue;
      if (near(lines[k]->start, cur)) {
        cur = lines[k]->end;
      } else if (near(lines[k]->end, cur)) {
        cur = lines[k]->start;
      } else {
        continue;
      }
      used[k] = true;
      advanced = true;
    }
    if (!advanced) return false;
  }
  return near(cur, first);
}

FilterResult FilterCorpus(const std::vector<Sketch>& corpus, const FilterOptions& options) {
  FilterResult out;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Sketch& s = corpus[i];
    const int entities = static_cast<int>(
        std::count_if(s.objects.begin(), s.objects.end(), [](const Object& o) { return IsEntity(o); }));
    if (entities < options.min_entities) {
      ++out.too_few;
    } else if (entities > options.max_entities) {
      ++out.too_many;
    } else if (IsAxisAlignedRectangle(s)) {
      ++out.rectangles;
    } else {
      out.kept.push_back(s);
      out.kept_index.push_back(i);
    }
  }
  return out;
}

// -------------------------------------------------------------------------------- dedup

std::string TypeSequence(const Sketch& s) {
  std::string out;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (i > 0) out += ',';
    out += ObjectTypeLabel(s.objects[i]);
  }
  return out;
}

namespace {

struct PackedBitmap {
  std::vector<uint64_t> words;
  int64_t count = 0;
};

PackedBitmap Pack(const Bitmap& b) {
  PackedBitmap p;
  p.words.assign((b.pixels.size() + 63) / 64, 0);
  for (size_t i = 0; i < b.pixels.size(); ++i) {
    if (b.pixels[i]) p.words[i / 64] |= uint64_t{1} << (i % 64);
  }
  for (uint64_t w : p.words) p.count += std::popcount(w);
  return p;
}

double PackedJaccard(const PackedBitmap& a, const PackedBitmap& b) {
  int64_t inter = 0;
  for (size_t i = 0; i < a.words.size(); ++i) inter += std::popcount(a.words[i] & b.words[i]);
  const int64_t uni = a.count + b.count - inter;
  return uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

size_t Find(std::vector<size_t>& parent, size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

DedupResult Dedup(const std::vector<Sketch>& corpus, const DedupOptions& options) {
  std::map<std::string, std::vector<size_t>> bins;
  for (size_t i = 0; i < corpus.size(); ++i) bins[TypeSequence(corpus[i])].push_back(i);
  std::vector<size_t> parent(corpus.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<PackedBitmap> renders(corpus.size());
  ParallelFor(corpus.size(), options.workers,
              [&](size_t i) { renders[i] = Pack(Render(corpus[i], options.resolution)); });
  for (const auto& [key, members] : bins) {
    for (size_t a = 0; a < members.size(); ++a) {
      for (size_t b = a + 1; b < members.size(); ++b) {
        if (PackedJaccard(renders[members[a]], renders[members[b]]) > options.threshold) continue;
        const size_t ra = Find(parent, members[a]), rb = Find(parent, members[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }
  DedupResult out;
  out.bins = static_cast<int>(bins.size());
  out.cluster.assign(corpus.size(), -1);
  std::map<size_t, int> id_of_root;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const size_t root = Find(parent, i);
    auto it = id_of_root.find(root);
    if (it == id_of_root.end()) {
      it = id_of_root.emplace(root, static_cast<int>(out.representatives.size())).first;
      out.representatives.push_back(i);
    }
    out.cluster[i] = it->second;
  }
  return out;
}

void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t threads = std::min<size_t>(n, static_cast<size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// -------------------------------------------------------------------------------- stats

std::vector<std::pair<std::string, const Histogram*>> CorpusStats::tables() const {
  std::vector<std::pair<std::string, const Histogram*>> out = {
      {"objects", &objects},
      {"entities", &entities},
      {"constraints", &constraints},
      {"closed_regions", &closed_regions},
      {"coincident", &coincident},
      {"triplet_length", &triplet_length},
      {"byte_length", &byte_length},
  };
  for (int k = 0; k < kNumConstraintKinds; ++k) {
    out.push_back({std::string("constraint.") + ConstraintKindName(static_cast<ConstraintKind>(k)),
                   &per_type[k]});
  }
  return out;
}

namespace {

void AddSketch(const Sketch& s, CorpusStats* st) {
  ++st->sketches;
  int64_t entities = 0, constraints = 0;
  std::array<int64_t, kNumConstraintKinds> per_type{};
  for (const Object& o : s.objects) {
    if (IsEntity(o)) {
      ++entities;
    } else {
      ++constraints;
      ++per_type[static_cast<int>(KindOf(AsConstraint(o)))];
    }
  }
  ++st->objects[static_cast<int64_t>(s.objects.size())];
  ++st->entities[entities];
  ++st->constraints[constraints];
  for (int k = 0; k < kNumConstraintKinds; ++k) ++st->per_type[k][per_type[k]];
  ++st->coincident[per_type[static_cast<int>(ConstraintKind::kCoincident)]];
  int regions = 0;
  try {
    regions = CountClosedRegions(Render(Normalize(s), 128));
  } catch (const GeometryError&) {
  }
  ++st->closed_regions[regions];
  ++st->triplet_length[static_cast<int64_t>(PredictedTriplets(Encode(s)).size())];
  ++st->byte_length[static_cast<int64_t>(Serialize(s).size()) + 1];
}

}  // namespace

CorpusStats ComputeStats(const std::vector<Sketch>& corpus) {
  CorpusStats st;
  for (const Sketch& s : corpus) AddSketch(s, &st);
  return st;
}

const char* SampleFailureName(SampleFailure f) {
  switch (f) {
    case SampleFailure::kNone:
      return "none";
    case SampleFailure::kParse:
      return "parse";
    case SampleFailure::kValidate:
      return "validate";
    case SampleFailure::kSolver:
      return "solver";
  }
  return "?";
}

SampleFailure ClassifySample(const SampleResult& r, double tol) {
  if (!r.valid) return SampleFailure::kParse;
  if (!ValidateSketch(r.sketch).empty()) return SampleFailure::kValidate;
  return Solve(r.sketch, tol).report.converged ? SampleFailure::kNone : SampleFailure::kSolver;
}

CorpusStats SampleStats(const std::vector<SampleResult>& samples, double tol) {
  CorpusStats st;
  for (const SampleResult& r : samples) {
    ++st.samples;
    if (ClassifySample(r, tol) != SampleFailure::kNone) {
      ++st.invalid_samples;
      continue;
    }
    AddSketch(r.sketch, &st);
  }
  return st;
}

void WriteStatsCsv(std::ostream& os, const CorpusStats& stats) {
  os << "table,value,count\n";
  os << "sketches,," << stats.sketches << '\n';
  for (const auto& [name, h] : stats.tables()) {
    for (const auto& [value, count] : *h) os << name << ',' << value << ',' << count << '\n';
  }
  if (stats.samples > 0) {
    os << "samples,," << stats.samples << '\n';
    os << "invalid_samples,," << stats.invalid_samples << '\n';
    os << "invalid_rate,," << stats.invalid_rate() << '\n';
  }
}

std::string HistogramSvg(const std::string& title, const Histogram& h) {
  const int width = 480, height = 240, margin = 30;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
     << "\" height=\"" << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  if (!h.empty()) {
    const int64_t lo = h.begin()->first, hi = h.rbegin()->first;
    int64_t peak = 0;
    for (const auto& [v, c] : h) peak = std::max(peak, c);
    const double bar = static_cast<double>(width - 2 * margin) / static_cast<double>(hi - lo + 1);
    const double plot = height - 2 * margin;
    for (const auto& [v, c] : h) {
      const double bh = plot * static_cast<double>(c) / static_cast<double>(peak);
      os << "<rect x=\"" << margin + bar * static_cast<double>(v - lo) << "\" y=\""
         << height - margin - bh << "\" width=\"" << std::max(bar - 1.0, 0.5) << "\" height=\"" << bh
         << "\" fill=\"steelblue\"><title>" << v << ": " << c << "</title></rect>\n";
    }
    os << "<text x=\"" << margin << "\" y=\"" << height - 10 << "\" font-size=\"11\">" << lo
       << "</text>\n"
       << "<text x=\"" << width - margin << "\" y=\"" << height - 10
       << "\" text-anchor=\"end\" font-size=\"11\">" << hi << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// -------------------------------------------------------------------------------- split

Split SplitCorpus(size_t n, const SplitOptions& options) {
  if (options.valid_fraction < 0.0 || options.test_fraction < 0.0 ||
      options.valid_fraction + options.test_fraction > 1.0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t valid = static_cast<size_t>(std::llround(options.valid_fraction * static_cast<double>(n)));
  const size_t test = std::min(n - valid, static_cast<size_t>(std::llround(options.test_fraction * static_cast<double>(n))));
  Split out;
  out.valid.assign(order.begin(), order.begin() + valid);
  out.test.assign(order.begin() + valid, order.begin() + valid + test);
  out.train.assign(order.begin() + valid + test, order.end());
  return out;
}

}  // namespace sketchgen
