/*!
 * \file sketchgen/pipeline.h
 * \brief Corpus ingestion, filtering, near-duplicate removal, statistics and splitting.
 */
#ifndef SKETCHGEN_PIPELINE_H_
#define SKETCHGEN_PIPELINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sketchgen/generator.h"
#include "sketchgen/sketch.h"

namespace sketchgen {

// ------------------------------------------------------------------------------- ingest

struct IngestIssue {
  /*! Zero-based record (line or file) number. */
  size_t record = 0;
  std::string reason;
  /*! True when the whole record was rejected; false for a dropped constraint. */
  bool rejected = true;
};

struct IngestOptions {
  bool normalize = true;
};

struct IngestResult {
  std::vector<Sketch> sketches;
  /*! Record number of each accepted sketch. */
  std::vector<size_t> source;
  std::vector<IngestIssue> issues;
  size_t records = 0;
};

/*!
 * One JSON sketch per non-blank line. Each accepted sketch is validated (pointers may index the
 * full table), reordered to interleaved order and optionally normalized. Constraints marked
 * external are dropped with an issue; malformed, invalid or degenerate records are rejected.
 */
IngestResult IngestJsonLines(std::istream& is, const IngestOptions& options = {});
/*! Every `*.sketchpb` file of a directory, in file-name order. */
IngestResult IngestDirectory(const std::string& dir, const IngestOptions& options = {});

void WriteJsonLines(std::ostream& os, const std::vector<Sketch>& corpus);

// ------------------------------------------------------------------------------- filter

/*! Exactly four line entities (construction or not) whose segments are horizontal/vertical and
 * join cyclically within `tol`. Constraints are ignored. */
bool IsAxisAlignedRectangle(const Sketch& s, double tol = 1e-6);

struct FilterOptions {
  int min_entities = 4;
  int max_entities = 100;
};

struct FilterResult {
  std::vector<Sketch> kept;
  std::vector<size_t> kept_index;
  int too_few = 0;
  int too_many = 0;
  int rectangles = 0;
};

FilterResult FilterCorpus(const std::vector<Sketch>& corpus, const FilterOptions& options = {});

// -------------------------------------------------------------------------------- dedup

struct DedupOptions {
  int resolution = 128;
  /*! Pairs at Jaccard distance <= threshold are linked. */
  double threshold = 0.1;
  int workers = 1;
};

struct DedupResult {
  /*! Index of the first member of each cluster, ascending. */
  std::vector<size_t> representatives;
  /*! Cluster id (index into representatives) of every input sketch. */
  std::vector<int> cluster;
  int bins = 0;
};

/*! Object-type sequence, e.g. "line,point,coincident". */
std::string TypeSequence(const Sketch& s);

/*! Single-linkage clustering of 128x128 renders within bins of equal type sequence. */
DedupResult Dedup(const std::vector<Sketch>& corpus, const DedupOptions& options = {});

/*! Runs fn(0..n-1) on up to `workers` threads; rethrows the first exception. */
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

// -------------------------------------------------------------------------------- stats

using Histogram = std::map<int64_t, int64_t>;

struct CorpusStats {
  int64_t sketches = 0;
  Histogram objects;
  Histogram entities;
  Histogram constraints;
  std::array<Histogram, kNumConstraintKinds> per_type;
  Histogram closed_regions;
  Histogram coincident;
  Histogram triplet_length;
  Histogram byte_length;
  /*! Set by SampleStats: samples counted and samples that were invalid or unsolvable. */
  int64_t samples = 0;
  int64_t invalid_samples = 0;

  double invalid_rate() const { return samples == 0 ? 0.0 : double(invalid_samples) / double(samples); }
  /*! Name/histogram pairs in a fixed order. */
  std::vector<std::pair<std::string, const Histogram*>> tables() const;
};

/*! Closed regions are counted on a 128x128 render of the normalized sketch. */
CorpusStats ComputeStats(const std::vector<Sketch>& corpus);

enum class SampleFailure { kNone, kParse, kValidate, kSolver };
const char* SampleFailureName(SampleFailure f);

/*! Parse failure (byte samples), validation failure, or a solver that does not converge. */
SampleFailure ClassifySample(const SampleResult& r, double tol = 1e-6);

/*! ComputeStats over the valid samples plus the invalid-sample count. */
CorpusStats SampleStats(const std::vector<SampleResult>& samples, double tol = 1e-6);

/*! Rows "table,value,count"; the invalid rate is appended when samples were counted. */
void WriteStatsCsv(std::ostream& os, const CorpusStats& stats);
/*! SVG bar chart of one histogram. */
std::string HistogramSvg(const std::string& title, const Histogram& h);

// -------------------------------------------------------------------------------- split

struct SplitOptions {
  double valid_fraction = 0.05;
  double test_fraction = 0.05;
  uint64_t seed = 0;
};

struct Split {
  std::vector<size_t> train;
  std::vector<size_t> valid;
  std::vector<size_t> test;
};

/*! Seeded shuffle of 0..n-1 cut into disjoint, exhaustive parts. */
Split SplitCorpus(size_t n, const SplitOptions& options = {});

}  // namespace sketchgen

#endif  // SKETCHGEN_PIPELINE_H_
