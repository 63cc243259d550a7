/*!
 * \file sketchgen/wire.h
 * \brief Deterministic binary wire encoding of sketches (the byte representation).
 *
 * Per field: tag varint (number << 3 | wire type), then
 *   wire type 0: base-128 little-endian varint (bool 0/1, enums, pointers), at most 5 bytes;
 *   wire type 1: 8-byte little-endian IEEE-754 double;
 *   wire type 2: varint length followed by a nested message.
 * Fields go out in ascending number order, repeated elements in list order (unpacked), only the
 * active oneof branch, and default values are always written.
 */
#ifndef SKETCHGEN_WIRE_H_
#define SKETCHGEN_WIRE_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchgen/schema.h"
#include "sketchgen/sketch.h"
#include "sketchgen/value.h"

namespace sketchgen {

using Bytes = std::vector<uint8_t>;

class WireParseError : public std::runtime_error {
 public:
  WireParseError(size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

inline constexpr int kByteEos = 256;
inline constexpr int kByteVocabulary = 257;
inline constexpr int kMaxVarintBytes = 5;

void AppendVarint(uint32_t value, Bytes* out);

Bytes SerializeValue(const SchemaRegistry& schema, const MessageSpec& message, const Value& v);
Value ParseValue(const SchemaRegistry& schema, const MessageSpec& message,
                 std::span<const uint8_t> bytes);

/*! Refuses (InvalidSketchError) sketches that fail ValidateSketch. */
Bytes Serialize(const Sketch& s);
Sketch Parse(std::span<const uint8_t> bytes);

/*! Each byte as a token, followed by EOS (256). */
std::vector<int> ByteTokens(std::span<const uint8_t> bytes);

}  // namespace sketchgen

#endif  // SKETCHGEN_WIRE_H_
