/*!
 * \file sketchgen/wire.cc
 */
#include "sketchgen/wire.h"

#include <algorithm>
#include <bit>
#include <cstring>

namespace sketchgen {

namespace {

constexpr int kWireVarint = 0;
constexpr int kWireFixed64 = 1;
constexpr int kWireLength = 2;

int WireTypeOf(const FieldSpec& f) {
  switch (f.kind) {
    case FieldKind::kReal:
      return kWireFixed64;
    case FieldKind::kMessage:
      return kWireLength;
    case FieldKind::kRepeated:
      return WireTypeOf(*f.element);
    default:
      return kWireVarint;
  }
}

/*! A concrete (numbered) field slot of a message: either a plain field or one oneof branch. */
struct Slot {
  int number;
  int field_index;
  int branch;  // -1 unless the slot is a oneof branch
  const FieldSpec* spec;
};

std::vector<Slot> SlotsOf(const MessageSpec& m) {
  std::vector<Slot> slots;
  for (size_t i = 0; i < m.fields.size(); ++i) {
    const FieldSpec& f = m.fields[i];
    if (f.kind == FieldKind::kOneof) {
      for (size_t b = 0; b < f.branches.size(); ++b) {
        slots.push_back({f.branches[b].number, static_cast<int>(i), static_cast<int>(b),
                         &f.branches[b]});
      }
    } else {
      slots.push_back({f.number, static_cast<int>(i), -1, &f});
    }
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.number < b.number; });
  return slots;
}

void AppendTag(int number, int wire_type, Bytes* out) {
  AppendVarint((static_cast<uint32_t>(number) << 3) | static_cast<uint32_t>(wire_type), out);
}

void AppendFixed64(double v, Bytes* out) {
  const auto bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<uint8_t>(bits >> (8 * i)));
}

uint32_t CheckedUnsigned(int64_t v) {
  if (v < 0 || v > static_cast<int64_t>(UINT32_MAX)) {
    throw InvalidSketchError("integer field out of 32-bit unsigned range");
  }
  return static_cast<uint32_t>(v);
}

void SerializeMessage(const SchemaRegistry& schema, const MessageSpec& m, const Value& v,
                      Bytes* out);

/*! Encodes one (non-repeated) occurrence of `f` with value `v`. Unset values encode defaults. */
void SerializeSingle(const SchemaRegistry& schema, const FieldSpec& f, int number, const Value& v,
                     Bytes* out) {
  switch (f.kind) {
    case FieldKind::kBool:
      AppendTag(number, kWireVarint, out);
      AppendVarint(v.is_set() && v.boolean ? 1u : 0u, out);
      break;
    case FieldKind::kEnum:
    case FieldKind::kPointer:
      AppendTag(number, kWireVarint, out);
      AppendVarint(v.is_set() ? CheckedUnsigned(v.integer) : 0u, out);
      break;
    case FieldKind::kReal:
      AppendTag(number, kWireFixed64, out);
      AppendFixed64(v.is_set() ? v.real : 0.0, out);
      break;
    case FieldKind::kMessage: {
      const MessageSpec& sub = schema.Message(f.message);
      Bytes payload;
      if (v.is_set()) {
        SerializeMessage(schema, sub, v, &payload);
      } else {
        SerializeMessage(schema, sub, Value::Message(sub.fields.size()), &payload);
      }
      AppendTag(number, kWireLength, out);
      AppendVarint(static_cast<uint32_t>(payload.size()), out);
      out->insert(out->end(), payload.begin(), payload.end());
      break;
    }
    default:
      throw InvalidSketchError("unsupported field kind in single-value position");
  }
}

void SerializeMessage(const SchemaRegistry& schema, const MessageSpec& m, const Value& v,
                      Bytes* out) {
  if (v.type != Value::Type::kMessage || v.items.size() != m.fields.size()) {
    throw InvalidSketchError("value does not match message " + m.name);
  }
  for (const Slot& slot : SlotsOf(m)) {
    const FieldSpec& field = m.fields[slot.field_index];
    const Value& fv = v.items[slot.field_index];
    if (slot.branch >= 0) {
      if (fv.type != Value::Type::kOneof) {
        throw InvalidSketchError(m.name + "." + field.name + ": oneof unset");
      }
      if (fv.branch == slot.branch) {
        SerializeSingle(schema, *slot.spec, slot.number, fv.items.at(0), out);
      }
    } else if (field.kind == FieldKind::kRepeated) {
      if (!fv.is_set()) continue;
      for (const Value& item : fv.items) {
        SerializeSingle(schema, *field.element, slot.number, item, out);
      }
    } else {
      SerializeSingle(schema, field, slot.number, fv, out);
    }
  }
}

// ----------------------------------------------------------------------------- parsing

class Reader {
 public:
  Reader(std::span<const uint8_t> bytes, size_t base) : bytes_(bytes), base_(base) {}

  bool done() const { return pos_ >= bytes_.size(); }
  size_t offset() const { return base_ + pos_; }

  uint32_t Varint() {
    const size_t start = offset();
    uint64_t value = 0;
    for (int i = 0; i < kMaxVarintBytes; ++i) {
      if (done()) throw WireParseError(start, "truncated varint");
      const uint8_t b = bytes_[pos_++];
      value |= static_cast<uint64_t>(b & 0x7F) << (7 * i);
      if (!(b & 0x80)) {
        if (value > UINT32_MAX) throw WireParseError(start, "varint exceeds 32 bits");
        return static_cast<uint32_t>(value);
      }
    }
    throw WireParseError(start, "varint longer than 5 bytes");
  }

  double Fixed64() {
    if (bytes_.size() - pos_ < 8) throw WireParseError(offset(), "truncated 64-bit value");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::span<const uint8_t> Take(size_t n, size_t* sub_base) {
    if (bytes_.size() - pos_ < n) throw WireParseError(offset(), "truncated length-delimited field");
    *sub_base = offset();
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const uint8_t> bytes_;
  size_t base_;
  size_t pos_ = 0;
};

Value ParseMessage(const SchemaRegistry& schema, const MessageSpec& m,
                   std::span<const uint8_t> bytes, size_t base);

Value ParseSingle(const SchemaRegistry& schema, const FieldSpec& f, Reader& r, size_t tag_offset) {
  switch (f.kind) {
    case FieldKind::kBool: {
      const uint32_t v = r.Varint();
      if (v > 1) throw WireParseError(tag_offset, f.name + ": boolean must be 0 or 1");
      return Value::Bool(v == 1);
    }
    case FieldKind::kEnum: {
      const uint32_t v = r.Varint();
      if (v >= static_cast<uint32_t>(f.cardinality)) {
        throw WireParseError(tag_offset, f.name + ": enum value " + std::to_string(v) +
                                             " out of range");
      }
      return Value::Int(v);
    }
    case FieldKind::kPointer:
      return Value::Int(r.Varint());
    case FieldKind::kReal:
      return Value::Real(r.Fixed64());
    case FieldKind::kMessage: {
      const uint32_t len = r.Varint();
      size_t sub_base = 0;
      auto sub = r.Take(len, &sub_base);
      return ParseMessage(schema, schema.Message(f.message), sub, sub_base);
    }
    default:
      throw WireParseError(tag_offset, "unsupported field kind");
  }
}

Value ParseMessage(const SchemaRegistry& schema, const MessageSpec& m,
                   std::span<const uint8_t> bytes, size_t base) {
  const auto slots = SlotsOf(m);
  Value out = Value::Message(m.fields.size());
  Reader r(bytes, base);
  while (!r.done()) {
    const size_t tag_offset = r.offset();
    const uint32_t tag = r.Varint();
    const int number = static_cast<int>(tag >> 3);
    const int wire_type = static_cast<int>(tag & 7);
    auto it = std::find_if(slots.begin(), slots.end(),
                           [number](const Slot& s) { return s.number == number; });
    if (it == slots.end()) {
      throw WireParseError(tag_offset, m.name + ": unknown field " + std::to_string(number));
    }
    const FieldSpec& field = m.fields[it->field_index];
    if (wire_type != WireTypeOf(*it->spec)) {
      throw WireParseError(tag_offset, m.name + "." + it->spec->name + ": wrong wire type " +
                                           std::to_string(wire_type));
    }
    Value& dst = out.items[it->field_index];
    if (it->branch >= 0) {
      if (dst.is_set()) {
        throw WireParseError(tag_offset, m.name + "." + field.name + ": oneof set twice");
      }
      dst = Value::Oneof(it->branch, ParseSingle(schema, *it->spec, r, tag_offset));
    } else if (field.kind == FieldKind::kRepeated) {
      if (!dst.is_set()) dst = Value::List();
      dst.items.push_back(ParseSingle(schema, *field.element, r, tag_offset));
    } else {
      if (dst.is_set()) {
        throw WireParseError(tag_offset, m.name + "." + field.name + ": duplicate field");
      }
      dst = ParseSingle(schema, field, r, tag_offset);
    }
  }
  for (size_t i = 0; i < m.fields.size(); ++i) {
    if (m.fields[i].kind == FieldKind::kOneof && !out.items[i].is_set()) {
      throw WireParseError(base, m.name + "." + m.fields[i].name + ": oneof unset");
    }
  }
  return out;
}

}  // namespace

void AppendVarint(uint32_t value, Bytes* out) {
  while (value >= 0x80) {
    out->push_back(static_cast<uint8_t>(value | 0x80));
    value >>= 7;
  }
  out->push_back(static_cast<uint8_t>(value));
}

Bytes SerializeValue(const SchemaRegistry& schema, const MessageSpec& message, const Value& v) {
  Bytes out;
  SerializeMessage(schema, message, v, &out);
  return out;
}

Value ParseValue(const SchemaRegistry& schema, const MessageSpec& message,
                 std::span<const uint8_t> bytes) {
  return ParseMessage(schema, message, bytes, 0);
}

Bytes Serialize(const Sketch& s) {
  const auto report = ValidateSketch(s, Ordering::kConcatenated);
  if (!report.empty()) throw InvalidSketchError("invalid sketch:\n" + FormatReport(report));
  const SchemaRegistry& schema = BuiltinSketchSchema();
  return SerializeValue(schema, schema.Root(), SketchToValue(s));
}

Sketch Parse(std::span<const uint8_t> bytes) {
  const SchemaRegistry& schema = BuiltinSketchSchema();
  Value v = ParseValue(schema, schema.Root(), bytes);
  try {
    return SketchFromValue(v);
  } catch (const std::invalid_argument& e) {
    throw WireParseError(0, e.what());
  }
}

std::vector<int> ByteTokens(std::span<const uint8_t> bytes) {
  std::vector<int> tokens(bytes.begin(), bytes.end());
  tokens.push_back(kByteEos);
  return tokens;
}

}  // namespace sketchgen
