/*!
 * \file sketchgen/tokens.h
 * \brief Token groups (field-path regular expressions with a discrete cardinality or a continuous
 * range) and 8-bit uniform quantization of continuous values.
 */
#ifndef SKETCHGEN_TOKENS_H_
#define SKETCHGEN_TOKENS_H_

#include <string>
#include <vector>

namespace sketchgen {

inline constexpr int kNumBins = 256;

struct TokenGroup {
  std::string name;
  /*! Full-match regular expression over dotted field ids. */
  std::string pattern;
  bool continuous = false;
  /*! Discrete groups: number of values. Continuous groups: kNumBins. */
  int cardinality = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/*! All groups, discrete first, in a fixed order; the index is the group id. */
const std::vector<TokenGroup>& TokenGroups();
int NumTokenGroups();
int GroupIndex(const std::string& name);

/*! Group id of a field id, or -1 if no group matches. Throws if more than one matches. */
int GroupOfField(const std::string& field_id);

/*! Bin in [0, 255]: round((clamp(x) - lo) / (hi - lo) * 255), halves away from zero. */
int Quantize(double x, const TokenGroup& g);
/*! lo + k * (hi - lo) / 255; throws std::out_of_range unless 0 <= k <= 255. */
double Dequantize(int k, const TokenGroup& g);
double HalfBinWidth(const TokenGroup& g);

}  // namespace sketchgen

#endif  // SKETCHGEN_TOKENS_H_
