/*!
 * \file sketchgen/tokens.cc
 */
#include "sketchgen/tokens.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <regex>
#include <stdexcept>

namespace sketchgen {

namespace {

TokenGroup Discrete(std::string name, std::string pattern, int cardinality) {
  return {std::move(name), std::move(pattern), false, cardinality, 0.0, 0.0};
}

TokenGroup Continuous(std::string name, std::string pattern, double lo, double hi) {
  return {std::move(name), std::move(pattern), true, kNumBins, lo, hi};
}

std::vector<TokenGroup> MakeGroups() {
  return {
      Discrete("objects.kind", R"(objects\.kind)", 2),
      Discrete("entity.kind", R"(.*\.entity\.kind)", 4),
      Discrete("constraint.kind", R"(.*\.constraint\.kind)", 16),
      Discrete("is_construction", R"(.*\.is_construction)", 2),
      Discrete("is_clockwise", R"(.*\.is_clockwise)", 2),
      Discrete("is_periodic", R"(.*\.is_periodic)", 2),
      Discrete("additional_params", R"(.*\.additional_params)", 2),
      Discrete("pointer", R"(.*\.(entity|entities|first|second|midpoint|mirror))", 256),
      Discrete("direction", R"(.*\.direction)", 3),
      Discrete("alignment", R"(.*\.alignment)", 2),
      Discrete("half_space", R"(.*\.half_space_(first|second))", 3),
      Continuous("coordinate", R"(.*\.(point|start|end|center|interp_points)\.(x|y))", -1.0, 1.0),
      Continuous("derivative", R"(.*\.(start|end)_derivative\.(x|y))", -100.0, 100.0),
      Continuous("phi", R"(.*\.(start|end)_phi)", 0.0, 3.0),
      Continuous("radius", R"(.*\.radius)", 0.0, 1.0),
      Continuous("length", R"(.*\.length)", 0.0, 2.0 * std::sqrt(2.0)),
      Continuous("angle", R"(.*\.angle)", -10.0, 10.0),
  };
}

}  // namespace

const std::vector<TokenGroup>& TokenGroups() {
  static const std::vector<TokenGroup> groups = MakeGroups();
  return groups;
}

int NumTokenGroups() { return static_cast<int>(TokenGroups().size()); }

int GroupIndex(const std::string& name) {
  const auto& groups = TokenGroups();
  for (size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].name == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown token group '" + name + "'");
}

int GroupOfField(const std::string& field_id) {
  static std::mutex mu;
  static std::map<std::string, int> cache;
  static const std::vector<std::regex> regexes = [] {
    std::vector<std::regex> out;
    for (const auto& g : TokenGroups()) out.emplace_back(g.pattern);
    return out;
  }();
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(field_id); it != cache.end()) return it->second;
  int found = -1;
  for (size_t i = 0; i < regexes.size(); ++i) {
    if (std::regex_match(field_id, regexes[i])) {
      if (found >= 0) {
        throw std::logic_error("field '" + field_id + "' matches groups " +
                               TokenGroups()[found].name + " and " + TokenGroups()[i].name);
      }
      found = static_cast<int>(i);
    }
  }
  cache.emplace(field_id, found);
  return found;
}

int Quantize(double x, const TokenGroup& g) {
  const double clamped = std::clamp(x, g.lo, g.hi);
  const long k = std::lround((clamped - g.lo) / (g.hi - g.lo) * (kNumBins - 1));
  return static_cast<int>(std::clamp<long>(k, 0, kNumBins - 1));
}

double Dequantize(int k, const TokenGroup& g) {
  if (k < 0 || k >= kNumBins) throw std::out_of_range("bin index out of range");
  return g.lo + k * (g.hi - g.lo) / (kNumBins - 1);
}

double HalfBinWidth(const TokenGroup& g) { return (g.hi - g.lo) / (2.0 * (kNumBins - 1)); }

}  // namespace sketchgen
