/*!
 * \file sketchgen/geometry.h
 * \brief Constraint residuals and Levenberg-Marquardt solving, rasterization, SVG/PGM export,
 * closed-region counting, normalization and Gaussian smoothing.
 *
 * Raster convention: a sketch point (x, y) in [-1, 1]^2 lands in column floor((x + 1) / 2 * W)
 * and row floor((y + 1) / 2 * H); x = 1 and y = 1 map to the last column/row.
 */
#ifndef SKETCHGEN_GEOMETRY_H_
#define SKETCHGEN_GEOMETRY_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchgen/sketch.h"

namespace sketchgen {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------- residuals

/*!
 * Flat parameter vector of a sketch, one block per entity:
 *   line [sx sy ex ey]; point [x y]; circle [cx cy r]; arc [cx cy sx sy ex ey];
 *   spline [p0x p0y ... sdx sdy edx edy (start_phi end_phi)].
 */
struct ResidualSystem {
  std::vector<double> params;
  /*! Parameters frozen by Fix constraints. */
  std::vector<char> frozen;
  /*! Offset of each entity's block, indexed by entity ordinal. */
  std::vector<size_t> entity_offset;
  /*! Number of residuals contributed by each constraint (objects order), then implicit ones. */
  std::vector<int> block_sizes;
  /*! Label per residual block ("coincident", "arc_radius", ...). */
  std::vector<std::string> block_labels;

  /*! Residual vector at `theta`. Throws GeometryError for incompatible pointees. */
  std::vector<double> Evaluate(const std::vector<double>& theta) const;
  /*! The sketch with entity parameters replaced by `theta`. */
  Sketch Apply(const std::vector<double>& theta) const;

  Sketch sketch;
  /*! Appends each block's residuals. */
  std::vector<std::function<void(const std::vector<double>&, std::vector<double>*)>> blocks;
};

/*! Builds the residual catalog. Throws GeometryError for incompatible pointees. */
ResidualSystem ConstraintResiduals(const Sketch& s);

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double initial_max_residual = 0.0;
  double max_residual = 0.0;
  double half_squared_norm = 0.0;
  int num_residuals = 0;
  /*! Set when the constraints cannot be expressed as residuals (incompatible pointees). */
  std::string error;
};

struct SolveResult {
  Sketch sketch;
  SolveReport report;
};

/*! Levenberg-Marquardt on 1/2 |r|^2 with forward-difference Jacobians; best iterate returned.
 * Incompatible pointees yield an unconverged report carrying the error and the input sketch. */
SolveResult Solve(const Sketch& s, double tol = 1e-9, int max_iter = 100);

// ---------------------------------------------------------------------------- raster

struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  size_t count() const;
  bool operator==(const Bitmap&) const = default;
};

/*! Polyline through an entity in sketch coordinates with consecutive points at most `max_step`
 * apart (a single vertex for points). */
std::vector<Vec2> SampleEntity(const Entity& e, double max_step);

/*! Binary render of non-construction geometry with 1-pixel strokes. Throws on zero resolution. */
Bitmap Render(const Sketch& s, int resolution);
/*! SVG 1.1 document; construction geometry dashed. */
std::string RenderSvg(const Sketch& s, int size = 256);

/*! Binary PGM (P5), 0/1 pixels written as 0/255. */
void WritePgm(std::ostream& os, const Bitmap& b);
/*! Reads a P5 or P2 PGM; pixels above half of maxval become 1. */
Bitmap ReadPgm(std::istream& is);

/*! Background 4-connected components that do not touch the border. */
int CountClosedRegions(const Bitmap& b);

/*! 1 - |A and B| / |A or B|; 0 when both are empty. */
double JaccardDistance(const Bitmap& a, const Bitmap& b);

/*! Separable Gaussian blur of a 0/1 bitmap (zero padding); sigma = 0 returns the bitmap as is. */
std::vector<double> GaussianSmooth(const Bitmap& b, double sigma);
/*! Euclidean distance between the smoothed images. */
double SmoothedL2(const Bitmap& a, const Bitmap& b, double sigma);

// ------------------------------------------------------------------------- normalize

struct BoundingBox {
  double min_x, min_y, max_x, max_y;
};

/*! Tight box of non-construction geometry (or of all geometry); throws GeometryError if there is
 * none. */
BoundingBox GeometryBounds(const Sketch& s, bool include_construction = false);

/*!
 * Uniform scale and translation taking the bounding box to a centered box in [-1, 1]^2 whose
 * longer side spans the range. Distance, Length, Diameter and Radius targets are scaled too.
 * Construction geometry joins the box when the rest has zero extent. Throws GeometryError when
 * the box is still degenerate.
 */
Sketch Normalize(const Sketch& s);

}  // namespace sketchgen

#endif  // SKETCHGEN_GEOMETRY_H_
