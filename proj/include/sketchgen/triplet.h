/*!
 * \file sketchgen/triplet.h
 * \brief Triplet token format: (discrete, continuous, end-flag) tokens with field contexts, the
 * schema-walking interpreter that decides which field each token fills and which tokens are legal,
 * encode/decode, orderings, and the line-oriented token text format.
 */
#ifndef SKETCHGEN_TRIPLET_H_
#define SKETCHGEN_TRIPLET_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchgen/schema.h"
#include "sketchgen/sketch.h"
#include "sketchgen/value.h"

namespace sketchgen {

struct Triplet {
  int64_t d = 0;
  double c = 0.0;
  bool f = false;

  static Triplet Discrete(int64_t d) { return {d, 0.0, false}; }
  static Triplet Continuous(double c) { return {0, c, false}; }
  static Triplet End() { return {0, 0.0, true}; }
  bool operator==(const Triplet&) const = default;
};

struct TokenContext {
  /*! Dotted path from the Sketch root, e.g. "objects.entity.line.start.x". */
  std::string field_id;
  /*! Object index. */
  int n = 0;
  /*! Position within the object (all tokens of the object, referrables included). */
  int m = 0;
  bool is_referrable = false;
  /*! Referrable tokens: part index within the entity. */
  int referrable_part = -1;
  bool operator==(const TokenContext&) const = default;
};

struct Token {
  Triplet t;
  TokenContext ctx;
  bool operator==(const Token&) const = default;
};

/*! What the interpreter expects next. Legal values are 0..legal_count-1 (discrete slots). */
struct Slot {
  std::string field_id;
  int group = -1;
  FieldKind kind = FieldKind::kBool;  // kOneof for a branch-choice token
  bool continuous = false;
  /*! Size of the group's value vocabulary (head width without the end column). */
  int group_cardinality = 0;
  /*! Discrete: number of legal values (pointers: min(table size, 256)). Continuous: 256 bins. */
  int legal_count = 0;
  bool end_allowed = false;
  int n = 0;
  int m = 0;
};

/*! Number of legal outcomes of a slot counting the end flag. */
inline int SupportSize(const Slot& s) { return s.legal_count + (s.end_allowed ? 1 : 0); }

class IllegalTokenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(size_t token_index, const std::string& what)
      : std::runtime_error("token " + std::to_string(token_index) + ": " + what),
        token_index_(token_index) {}
  size_t token_index() const { return token_index_; }

 private:
  size_t token_index_;
};

/*!
 * State machine over the schema. Copyable value type.
 * Step() consumes one predicted token; referrable tokens of a completed entity are returned by
 * Step() (they are never predicted). Constraints cannot be started while the referrable table is
 * empty, so every non-terminal state has at least one legal token.
 */
class Interpreter {
 public:
  struct StepResult {
    TokenContext context;
    std::vector<Token> referrables;
  };

  explicit Interpreter(const SchemaRegistry& schema = BuiltinSketchSchema());

  bool terminal() const { return frames_.empty(); }
  /*! Requires !terminal(). */
  const Slot& slot() const { return slot_; }

  /*! Empty string if legal, otherwise the reason. */
  std::string CheckToken(const Triplet& t) const;
  /*! Throws IllegalTokenError (state unchanged) if the token is illegal. */
  StepResult Step(const Triplet& t);

  const ReferrableTable& referrables() const { return table_; }
  /*! Number of fully decoded objects. */
  size_t completed_objects() const { return completed_objects_; }
  /*! True when the next token would start a new object (or close the sketch). */
  bool at_object_boundary() const;

  /*! The decoded sketch. Requires terminal(). */
  Sketch ToSketch() const;
  /*! The completed objects so far. */
  Sketch PartialSketch() const;

 private:
  struct Frame {
    bool is_list = false;
    /*! Fields frames: the fields being filled (a message's fields or a single oneof branch). */
    const FieldSpec* fields = nullptr;
    size_t num_fields = 0;
    size_t cursor = 0;
    /*! Fields frames for a whole message (nullptr for a oneof branch frame). */
    const MessageSpec* message = nullptr;
    /*! List frames: the repeated field and the number of committed elements. */
    const FieldSpec* repeated = nullptr;
    int count = 0;
    bool speculative = false;
    /*! Path of child indices from the root value to the target value. */
    std::vector<int> path;
    /*! Field-id prefix for the fields of this frame ("objects.entity.line."). */
    std::string prefix;
    bool is_object = false;
    bool is_root_list = false;
  };

  Value& At(const std::vector<int>& path);
  const Value& At(const std::vector<int>& path) const;
  void Advance();
  void PushElement(Frame& list);
  void CloseSpeculative();
  void OnFramePopped(const Frame& f, std::vector<Token>* injected);
  void Write(const Triplet& t);

  const SchemaRegistry* schema_;
  Value root_;
  std::vector<Frame> frames_;
  Slot slot_;
  ReferrableTable table_;
  size_t completed_objects_ = 0;
  uint32_t entity_count_ = 0;
  int m_ = 0;
  std::vector<Token> pending_refs_;
};

/*!
 * Depth-first tokenization (independent of the interpreter). Includes injected referrable tokens
 * (ctx.is_referrable). Refuses sketches that fail ValidateSketch (pointers must index the prefix
 * table at the constraint's position).
 */
std::vector<Token> Encode(const Sketch& s);
/*! The predicted tokens only (referrables dropped). */
std::vector<Triplet> PredictedTriplets(const std::vector<Token>& tokens);

/*! Drives the interpreter; throws DecodeError with the index of the first illegal token. */
Sketch Decode(std::span<const Triplet> tokens);

/*! A predicted token with the slot it filled; referrables carry a default slot. */
struct AnnotatedToken {
  Token token;
  Slot slot;
};

/*! Replays predicted tokens through the interpreter and interleaves the injected referrables. */
std::vector<AnnotatedToken> Annotate(std::span<const Triplet> tokens);

/*! Every field id that can occur in a token, plus "<entity>.ref" ids, in a fixed order. */
const std::vector<std::string>& FieldIds();
int FieldIdIndex(const std::string& field_id);

class ReorderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*!
 * concatenated: entities (original order) then constraints (original order).
 * interleaved: each constraint right after the last entity it references, stable.
 * Pointer values are unchanged by construction (checked).
 */
Sketch Reorder(const Sketch& s, Ordering mode);

/*! One predicted token per line: `d c f field_id n m`. */
void WriteTokenText(std::ostream& os, const std::vector<Token>& tokens);
/*! Reads the d, c, f columns (remaining columns are informational). */
std::vector<Triplet> ReadTokenText(std::istream& is);

}  // namespace sketchgen

#endif  // SKETCHGEN_TRIPLET_H_
