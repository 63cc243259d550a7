#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.h"
#include "sketchgen/pipeline.h"
#include "sketchgen/sketch_json.h"
#include "sketchgen/synth.h"
#include "sketchgen/wire.h"

namespace sketchgen {

using testing::Line;
using testing::Square;

namespace {

Sketch Rotated(Sketch s, double angle) {
  const double c = std::cos(angle), sn = std::sin(angle);
  for (Object& o : s.objects) {
    if (auto* e = std::get_if<Entity>(&o)) {
      if (auto* l = std::get_if<LineEntity>(e)) {
        for (Vec2* p : {&l->start, &l->end}) *p = {c * p->x - sn * p->y, sn * p->x + c * p->y};
      }
    }
  }
  return s;
}

}  // namespace

TEST_CASE("ingest: line+point, unknown kind, external constraint, invalid pointer") {
  std::stringstream in;
  in << DumpSketchJson(testing::LinePointSketch()) << "\n\n";
  in << R"({"objects":[{"kind":"banana"}]})" << "\n";
  in << R"({"objects":[{"kind":"line","start":{"x":0,"y":0},"end":{"x":1,"y":0}},)"
     << R"({"kind":"fix","entities":[0],"external":true}]})" << "\n";
  in << R"({"objects":[{"kind":"line","start":{"x":0,"y":0},"end":{"x":1,"y":0}},)"
     << R"({"kind":"fix","entities":[9]}]})" << "\n";
  in << "not json\n";
  const IngestResult r = IngestJsonLines(in);
  CHECK(r.records == 5);
  REQUIRE(r.sketches.size() == 2);
  CHECK(r.source == std::vector<size_t>{0, 3});
  CHECK(r.sketches[1].objects.size() == 1);
  int rejected = 0, dropped = 0;
  for (const IngestIssue& i : r.issues) (i.rejected ? rejected : dropped)++;
  CHECK(rejected == 3);
  CHECK(dropped == 1);
  CHECK(r.issues[0].reason.find("banana") != std::string::npos);
  CHECK(r.issues[1].reason.find("external") != std::string::npos);
  const BoundingBox box = GeometryBounds(r.sketches[1]);
  CHECK(box.max_x - box.min_x == doctest::Approx(2.0));
  const BoundingBox with_construction = GeometryBounds(r.sketches[0], true);
  CHECK(with_construction.max_x - with_construction.min_x == doctest::Approx(2.0));
}

TEST_CASE("ingest: constraints before their entities are reordered") {
  Sketch s;
  s.objects.push_back(Constraint{HorizontalConstraint{{0}}});
  s.objects.push_back(Line(0, 0, 2, 0));
  s.objects.push_back(Line(0, 0, 0, 1));
  std::stringstream in(DumpSketchJson(s) + "\n");
  const IngestResult r = IngestJsonLines(in, {false});
  REQUIRE(r.sketches.size() == 1);
  CHECK(TypeSequence(r.sketches[0]) == "line,horizontal,line");
}

TEST_CASE("ingest: directory of binaries") {
  const auto dir = std::filesystem::temp_directory_path() / "sketchgen_ingest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream a(dir / "a.sketchpb", std::ios::binary);
    const Bytes b = Serialize(Square(0, 1));
    a.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    std::ofstream bad(dir / "b.sketchpb", std::ios::binary);
    bad << "\xff\xff";
    std::ofstream other(dir / "c.txt");
    other << "x";
  }
  const IngestResult r = IngestDirectory(dir.string());
  CHECK(r.records == 2);
  CHECK(r.sketches.size() == 1);
  CHECK(r.issues.size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("filter") {
  Sketch three = Square(0, 1);
  three.objects.pop_back();
  Sketch many;
  for (int i = 0; i < 101; ++i) many.objects.push_back(Line(0, 0, 1, i * 0.01));
  Sketch triangle_plus = Square(0, 1);
  std::get<LineEntity>(std::get<Entity>(triangle_plus.objects[2])).end = {0.1, 1.0};
  const std::vector<Sketch> corpus{three, Square(-1, 1), Rotated(Square(-0.5, 0.5), std::acos(-1.0) / 4),
                                   many, triangle_plus};
  const FilterResult f = FilterCorpus(corpus);
  CHECK(f.too_few == 1);
  CHECK(f.too_many == 1);
  CHECK(f.rectangles == 1);
  CHECK(f.kept_index == std::vector<size_t>{2, 4});
  CHECK(IsAxisAlignedRectangle(testing::ConstrainedSquare(0, 1)));
  Sketch reversed = Square(0, 2);
  std::swap(std::get<LineEntity>(std::get<Entity>(reversed.objects[1])).start,
            std::get<LineEntity>(std::get<Entity>(reversed.objects[1])).end);
  std::swap(reversed.objects[1], reversed.objects[3]);
  CHECK(IsAxisAlignedRectangle(reversed));
}

TEST_CASE("dedup: identical, distinct, bins, idempotence") {
  const Sketch a = Square(-0.5, 0.5);
  const Sketch b = Square(-0.9, 0.9);
  Sketch c = a;
  c.objects.push_back(Constraint{HorizontalConstraint{{0}}});
  const DedupResult r = Dedup({a, b, a, c, b});
  CHECK(r.representatives == std::vector<size_t>{0, 1, 3});
  CHECK(r.cluster == std::vector<int>{0, 1, 0, 2, 1});
  CHECK(r.bins == 2);
  const DedupResult again = Dedup({a, b, c});
  CHECK(again.representatives.size() == 3);
}

TEST_CASE("dedup: single linkage chains") {
  std::vector<Sketch> corpus;
  const double px = 2.0 / 128.0;
  for (int i = 0; i < 6; ++i) {
    const double off = (i % 3 - 1) * 0.3 * px + (i / 3) * 10 * px;
    corpus.push_back(Square(-0.5 + 0.5 * px + off, 0.5 + 0.5 * px + off));
  }
  const DedupResult r = Dedup(corpus, {128, 0.1});
  CHECK(r.representatives == std::vector<size_t>{0, 3});
  const DedupResult strict = Dedup(corpus, {128, -1.0});
  CHECK(strict.representatives.size() == corpus.size());
}

TEST_CASE("stats") {
  const CorpusStats t = ComputeStats({testing::LinePointSketch()});
  CHECK(t.objects.at(2) == 1);
  CHECK(t.coincident.at(0) == 1);
  CHECK(t.triplet_length.at(13) == 1);
  const CorpusStats sq = ComputeStats({testing::ConstrainedSquare(-0.5, 0.5)});
  CHECK(sq.coincident.at(4) == 1);
  CHECK(sq.closed_regions.at(1) == 1);
  std::mt19937_64 rng(1);
  std::vector<Sketch> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back(RandomSketch(rng));
  const CorpusStats st = ComputeStats(corpus);
  for (const auto& [name, h] : st.tables()) {
    int64_t total = 0;
    for (const auto& [v, c] : *h) total += c;
    CHECK_MESSAGE(total == 40, name);
  }
  std::ostringstream csv;
  WriteStatsCsv(csv, st);
  CHECK(csv.str().rfind("table,value,count\n", 0) == 0);
  CHECK(HistogramSvg("objects", st.objects).find("<rect x=") != std::string::npos);
}

TEST_CASE("sample classification") {
  SampleResult ok;
  ok.sketch = testing::ConstrainedSquare(-0.5, 0.5);
  CHECK(ClassifySample(ok) == SampleFailure::kNone);
  SampleResult bad;
  bad.valid = false;
  CHECK(ClassifySample(bad) == SampleFailure::kParse);
  SampleResult contradiction;
  contradiction.sketch.objects = {Line(0, 0, 1, 0), Line(0, 1, 1, 1.5),
                                  Constraint{ParallelConstraint{{0, 3}}},
                                  Constraint{PerpendicularConstraint{0, 3}}};
  CHECK(ClassifySample(contradiction) == SampleFailure::kSolver);
  const CorpusStats st = SampleStats({ok, bad, contradiction});
  CHECK(st.samples == 3);
  CHECK(st.invalid_samples == 2);
  CHECK(st.sketches == 1);
}

TEST_CASE("split is disjoint and exhaustive") {
  const Split s = SplitCorpus(1000, {0.1, 0.1, 7});
  CHECK(s.valid.size() == 100);
  CHECK(s.test.size() == 100);
  std::set<size_t> all(s.train.begin(), s.train.end());
  all.insert(s.valid.begin(), s.valid.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1000);
  CHECK(SplitCorpus(1000, {0.1, 0.1, 7}).train == s.train);
  CHECK_THROWS(SplitCorpus(10, {0.6, 0.6, 0}));
}

}  // namespace sketchgen
