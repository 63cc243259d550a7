/*!
 * \file sketchgen/sketch_json.h
 * \brief Canonical JSON exchange format: `{"objects": [{"kind": "line", ...}, ...]}` with field
 * names matching the message definitions. A bare array of objects is also accepted.
 */
#ifndef SKETCHGEN_SKETCH_JSON_H_
#define SKETCHGEN_SKETCH_JSON_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchgen/sketch.h"

namespace sketchgen {

class JsonFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*!
 * Parses one sketch. Constraints carrying `"external": true` are dropped and described in
 * `dropped` when it is non-null; otherwise they raise JsonFormatError.
 */
Sketch SketchFromJson(const nlohmann::json& j, std::vector<std::string>* dropped = nullptr);
Sketch ParseSketchJson(std::string_view text);

nlohmann::json SketchToJson(const Sketch& s);
nlohmann::json ObjectToJson(const Object& o);
/*! indent < 0 prints a single line. */
std::string DumpSketchJson(const Sketch& s, int indent = -1);

}  // namespace sketchgen

#endif  // SKETCHGEN_SKETCH_JSON_H_
