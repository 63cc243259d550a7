/*!
 * \file sketchgen/schema.h
 * \brief Message meta-model (fields, nesting, oneof, repeated, options) and the built-in sketch
 * schema. The registry is plain data; the wire codec and the triplet interpreter both walk it at
 * runtime.
 */
#ifndef SKETCHGEN_SCHEMA_H_
#define SKETCHGEN_SCHEMA_H_

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchgen {

class Value;

enum class FieldKind { kBool, kEnum, kReal, kPointer, kMessage, kOneof, kRepeated };

const char* FieldKindName(FieldKind kind);

struct FieldSpec {
  std::string name;
  /*! Wire field number. Zero for a oneof group (its branches carry the numbers). */
  int number = 0;
  FieldKind kind = FieldKind::kBool;
  /*! kEnum: number of enumerators. */
  int cardinality = 0;
  /*! kEnum: enumerator names in value order. */
  std::vector<std::string> enum_values;
  /*! kMessage: referenced message name. */
  std::string message;
  /*! kOneof: mutually exclusive branches, in declaration order. */
  std::vector<FieldSpec> branches;
  /*! kRepeated: the element type (its name/number mirror the repeated field). */
  std::shared_ptr<const FieldSpec> element;
  /*! kRepeated: minimum element count (the `at_least` field option). */
  int at_least = 0;

  bool IsScalar() const {
    return kind == FieldKind::kBool || kind == FieldKind::kEnum || kind == FieldKind::kReal ||
           kind == FieldKind::kPointer;
  }
};

struct MessageSpec {
  std::string name;
  std::vector<FieldSpec> fields;
  /*! Name of the oneof handler selecting this message's oneof branch from earlier fields. */
  std::optional<std::string> handler;
  /*! Constraint payload messages may hold pointers; entities may not. */
  bool allows_pointers = false;

  /*! Index into `fields` of the field called `name`, or -1. */
  int FieldIndex(const std::string& name) const;
  /*! The first oneof field, or nullptr. */
  const FieldSpec* Oneof() const;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*! Raised when a oneof handler runs before the fields it depends on are populated. */
class SchemaOrderError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class SchemaRegistry {
 public:
  SchemaRegistry(std::map<std::string, MessageSpec> messages, std::string root);

  const MessageSpec& Message(const std::string& name) const;
  const MessageSpec& Root() const { return Message(root_); }
  const std::string& root_name() const { return root_; }
  const std::map<std::string, MessageSpec>& messages() const { return messages_; }

  /*! Throws SchemaError on the first violated invariant. */
  void Validate() const;

 private:
  std::map<std::string, MessageSpec> messages_;
  std::string root_;
};

/*! The sketch schema: Sketch, Object, Entity (4 kinds), Constraint (16 kinds) and nested types. */
const SchemaRegistry& BuiltinSketchSchema();
SchemaRegistry LoadBuiltinSketchSchema();

/*!
 * Branch index chosen by the message's handler given the fields populated so far, or
 * std::nullopt when the oneof has no handler (the token stream chooses).
 * `partial` is a message value of `message`.
 */
std::optional<int> ResolveOneofBranch(const MessageSpec& message, const Value& partial);

/*! Names accepted in MessageSpec::handler. */
bool IsKnownHandler(const std::string& name);

/*! Canonical, diff-stable text dump of a registry. */
std::string DumpSchema(const SchemaRegistry& registry);

}  // namespace sketchgen

#endif  // SKETCHGEN_SCHEMA_H_
