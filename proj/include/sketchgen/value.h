/*!
 * \file sketchgen/value.h
 * \brief Schema-agnostic message value tree used by the wire codec and the triplet interpreter.
 */
#ifndef SKETCHGEN_VALUE_H_
#define SKETCHGEN_VALUE_H_

#include <cstdint>
#include <utility>
#include <vector>

namespace sketchgen {

/*!
 * A node of a dynamic message.
 *  - kMessage: `items[k]` holds field k of the MessageSpec (declaration order).
 *  - kList: `items` are the repeated elements.
 *  - kOneof: `branch` is the active branch, `items[0]` its payload.
 */
class Value {
 public:
  enum class Type { kUnset, kBool, kInt, kReal, kMessage, kList, kOneof };

  Type type = Type::kUnset;
  bool boolean = false;
  int64_t integer = 0;
  double real = 0.0;
  int branch = -1;
  std::vector<Value> items;

  static Value Bool(bool v) {
    Value out;
    out.type = Type::kBool;
    out.boolean = v;
    return out;
  }
  static Value Int(int64_t v) {
    Value out;
    out.type = Type::kInt;
    out.integer = v;
    return out;
  }
  static Value Real(double v) {
    Value out;
    out.type = Type::kReal;
    out.real = v;
    return out;
  }
  static Value Message(size_t num_fields) {
    Value out;
    out.type = Type::kMessage;
    out.items.resize(num_fields);
    return out;
  }
  static Value List() {
    Value out;
    out.type = Type::kList;
    return out;
  }
  static Value Oneof(int branch, Value payload) {
    Value out;
    out.type = Type::kOneof;
    out.branch = branch;
    out.items.push_back(std::move(payload));
    return out;
  }

  bool is_set() const { return type != Type::kUnset; }

  bool operator==(const Value&) const = default;
};

}  // namespace sketchgen

#endif  // SKETCHGEN_VALUE_H_
