/*!
 * \file sketchgen/triplet.cc
 */
#include "sketchgen/triplet.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "sketchgen/tokens.h"

namespace sketchgen {

namespace {

std::string RefFieldId(EntityKind kind) {
  return std::string("objects.entity.") + EntityKindName(kind) + ".ref";
}

/*! True if every value of this field necessarily contains a pointer. */
bool RequiresPointer(const SchemaRegistry& schema, const FieldSpec& f) {
  switch (f.kind) {
    case FieldKind::kPointer:
      return true;
    case FieldKind::kMessage:
      for (const auto& g : schema.Message(f.message).fields) {
        if (RequiresPointer(schema, g)) return true;
      }
      return false;
    case FieldKind::kRepeated:
      return f.at_least > 0 && RequiresPointer(schema, *f.element);
    case FieldKind::kOneof:
      return std::all_of(f.branches.begin(), f.branches.end(),
                         [&](const FieldSpec& b) { return RequiresPointer(schema, b); });
    default:
      return false;
  }
}

/*! Branches usable while the referrable table is empty (a leading run of branches). */
int BranchesWithoutPointers(const SchemaRegistry& schema, const FieldSpec& oneof) {
  int k = 0;
  while (k < static_cast<int>(oneof.branches.size()) &&
         !RequiresPointer(schema, oneof.branches[k])) {
    ++k;
  }
  for (size_t j = k; j < oneof.branches.size(); ++j) {
    if (!RequiresPointer(schema, oneof.branches[j])) {
      throw std::logic_error(oneof.name + ": pointer-free branches must precede the others");
    }
  }
  return k;
}

/*! Field id of the first token of a message value. */
std::string FirstFieldId(const SchemaRegistry& schema, const MessageSpec& msg,
                         const std::string& prefix) {
  if (msg.fields.empty()) throw std::logic_error(msg.name + " has no fields");
  const FieldSpec& f = msg.fields.front();
  switch (f.kind) {
    case FieldKind::kMessage:
      return FirstFieldId(schema, schema.Message(f.message), prefix + f.name + ".");
    case FieldKind::kRepeated:
      if (f.element->kind == FieldKind::kMessage) {
        return FirstFieldId(schema, schema.Message(f.element->message), prefix + f.name + ".");
      }
      return prefix + f.name;
    default:
      return prefix + f.name;
  }
}

std::string ElementFirstFieldId(const SchemaRegistry& schema, const FieldSpec& repeated,
                                const std::string& list_id) {
  if (repeated.element->kind == FieldKind::kMessage) {
    return FirstFieldId(schema, schema.Message(repeated.element->message), list_id + ".");
  }
  return list_id;
}

int GroupOrThrow(const std::string& field_id) {
  const int g = GroupOfField(field_id);
  if (g < 0) throw std::logic_error("no token group for field '" + field_id + "'");
  return g;
}

}  // namespace

// --------------------------------------------------------------------------- interpreter

Interpreter::Interpreter(const SchemaRegistry& schema) : schema_(&schema) {
  const MessageSpec& root = schema.Root();
  root_ = Value::Message(root.fields.size());
  Frame f;
  f.fields = root.fields.data();
  f.num_fields = root.fields.size();
  f.message = &root;
  frames_.push_back(std::move(f));
  Advance();
  pending_refs_.clear();
}

Value& Interpreter::At(const std::vector<int>& path) {
  Value* v = &root_;
  for (int idx : path) v = &v->items[idx];
  return *v;
}

const Value& Interpreter::At(const std::vector<int>& path) const {
  const Value* v = &root_;
  for (int idx : path) v = &v->items[idx];
  return *v;
}

void Interpreter::Advance() {
  auto finish_slot = [this](std::string field_id, FieldKind kind, int legal_count,
                            bool list_scalar) {
    Slot s;
    s.field_id = std::move(field_id);
    s.group = GroupOrThrow(s.field_id);
    s.kind = kind;
    s.continuous = kind == FieldKind::kReal;
    s.group_cardinality = TokenGroups()[s.group].cardinality;
    s.legal_count = s.continuous ? kNumBins : legal_count;
    // End is legal only on the first token of an element of the innermost open list.
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      if (!it->is_list) continue;
      if (it->speculative || list_scalar) {
        s.end_allowed = it->count >= it->repeated->at_least;
      }
      break;
    }
    s.n = static_cast<int>(completed_objects_);
    s.m = m_;
    slot_ = std::move(s);
  };

  while (!frames_.empty()) {
    Frame& top = frames_.back();
    if (top.is_list) {
      if (top.speculative) throw std::logic_error("list element produced no tokens");
      const FieldSpec& elem = *top.repeated->element;
      if (elem.IsScalar()) {
        const int legal = elem.kind == FieldKind::kPointer
                              ? static_cast<int>(std::min<size_t>(table_.size(),
                                                                  kMaxPointerVocabulary))
                          : elem.kind == FieldKind::kEnum ? elem.cardinality
                                                          : 2;
        finish_slot(top.prefix, elem.kind, legal, true);
        return;
      }
      const MessageSpec& sub = schema_->Message(elem.message);
      Value& list = At(top.path);
      const int idx = static_cast<int>(list.items.size());
      list.items.push_back(Value::Message(sub.fields.size()));
      top.speculative = true;
      if (top.is_root_list) m_ = 0;
      Frame f;
      f.fields = sub.fields.data();
      f.num_fields = sub.fields.size();
      f.message = &sub;
      f.path = top.path;
      f.path.push_back(idx);
      f.prefix = top.prefix + ".";
      f.is_object = top.is_root_list;
      frames_.push_back(std::move(f));
      continue;
    }

    if (top.cursor == top.num_fields) {
      Frame done = std::move(frames_.back());
      frames_.pop_back();
      OnFramePopped(done, &pending_refs_);
      continue;
    }
    const FieldSpec& field = top.fields[top.cursor];
    Value& target = At(top.path);
    switch (field.kind) {
      case FieldKind::kBool:
        finish_slot(top.prefix + field.name, field.kind, 2, false);
        return;
      case FieldKind::kEnum:
        finish_slot(top.prefix + field.name, field.kind, field.cardinality, false);
        return;
      case FieldKind::kReal:
        finish_slot(top.prefix + field.name, field.kind, 0, false);
        return;
      case FieldKind::kPointer:
        finish_slot(top.prefix + field.name, field.kind,
                    static_cast<int>(std::min<size_t>(table_.size(), kMaxPointerVocabulary)),
                    false);
        return;
      case FieldKind::kMessage: {
        const MessageSpec& sub = schema_->Message(field.message);
        target.items[top.cursor] = Value::Message(sub.fields.size());
        Frame f;
        f.fields = sub.fields.data();
        f.num_fields = sub.fields.size();
        f.message = &sub;
        f.path = top.path;
        f.path.push_back(static_cast<int>(top.cursor));
        f.prefix = top.prefix + field.name + ".";
        ++top.cursor;
        frames_.push_back(std::move(f));
        continue;
      }
      case FieldKind::kOneof: {
        std::optional<int> branch;
        if (top.message != nullptr) branch = ResolveOneofBranch(*top.message, target);
        if (!branch) {
          const int legal = table_.size() == 0 ? BranchesWithoutPointers(*schema_, field)
                                               : static_cast<int>(field.branches.size());
          finish_slot(top.prefix + field.name, FieldKind::kOneof, legal, false);
          return;
        }
        target.items[top.cursor] = Value::Oneof(*branch, Value());
        Frame f;
        f.fields = &field.branches[*branch];
        f.num_fields = 1;
        f.path = top.path;
        f.path.push_back(static_cast<int>(top.cursor));
        f.prefix = top.prefix;
        ++top.cursor;
        frames_.push_back(std::move(f));
        continue;
      }
      case FieldKind::kRepeated: {
        target.items[top.cursor] = Value::List();
        Frame f;
        f.is_list = true;
        f.repeated = &field;
        f.path = top.path;
        f.path.push_back(static_cast<int>(top.cursor));
        f.prefix = top.prefix + field.name;
        f.is_root_list = frames_.size() == 1;
        ++top.cursor;
        frames_.push_back(std::move(f));
        continue;
      }
    }
  }
}

void Interpreter::OnFramePopped(const Frame& f, std::vector<Token>* injected) {
  if (!f.is_object) return;
  const Object o = ObjectFromValue(At(f.path));
  if (IsEntity(o)) {
    const Entity& e = AsEntity(o);
    const uint32_t before = static_cast<uint32_t>(table_.size());
    table_.Append(e, static_cast<uint32_t>(completed_objects_), entity_count_++);
    const std::string id = RefFieldId(KindOf(e));
    for (uint32_t k = 0; before + k < table_.size(); ++k) {
      Token t;
      t.t = Triplet::Discrete(k);
      t.ctx = {id, static_cast<int>(completed_objects_), m_++, true, static_cast<int>(k)};
      injected->push_back(std::move(t));
    }
  }
  ++completed_objects_;
}

std::string Interpreter::CheckToken(const Triplet& t) const {
  if (terminal()) return "sketch is already complete";
  if (t.f) {
    if (!slot_.end_allowed) return "end flag not allowed at " + slot_.field_id;
    if (t.d != 0 || t.c != 0.0) return "end token must be (0, 0.0, true)";
    return "";
  }
  if (slot_.continuous) {
    if (t.d != 0) return slot_.field_id + ": continuous token must have d = 0";
    if (!std::isfinite(t.c)) return slot_.field_id + ": non-finite value";
    return "";
  }
  if (t.c != 0.0) return slot_.field_id + ": discrete token must have c = 0.0";
  if (t.d < 0 || t.d >= slot_.legal_count) {
    return slot_.field_id + ": value " + std::to_string(t.d) + " outside legal range [0, " +
           std::to_string(slot_.legal_count) + ") (group cardinality " +
           std::to_string(slot_.group_cardinality) + ")";
  }
  return "";
}

void Interpreter::CloseSpeculative() {
  while (!frames_.back().is_list) frames_.pop_back();
  Frame& list = frames_.back();
  if (list.speculative) {
    At(list.path).items.pop_back();
    list.speculative = false;
  }
  frames_.pop_back();
}

void Interpreter::Write(const Triplet& t) {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    if (!it->is_list) continue;
    if (it->speculative) {
      it->speculative = false;
      ++it->count;
    }
    break;
  }
  Frame& top = frames_.back();
  if (top.is_list) {
    const FieldSpec& elem = *top.repeated->element;
    At(top.path).items.push_back(elem.kind == FieldKind::kBool ? Value::Bool(t.d == 1)
                                                               : Value::Int(t.d));
    ++top.count;
    return;
  }
  const FieldSpec& field = top.fields[top.cursor];
  Value& target = At(top.path);
  switch (field.kind) {
    case FieldKind::kBool:
      target.items[top.cursor] = Value::Bool(t.d == 1);
      ++top.cursor;
      return;
    case FieldKind::kEnum:
    case FieldKind::kPointer:
      target.items[top.cursor] = Value::Int(t.d);
      ++top.cursor;
      return;
    case FieldKind::kReal:
      target.items[top.cursor] = Value::Real(t.c);
      ++top.cursor;
      return;
    case FieldKind::kOneof: {
      const int branch = static_cast<int>(t.d);
      target.items[top.cursor] = Value::Oneof(branch, Value());
      Frame f;
      f.fields = &field.branches[branch];
      f.num_fields = 1;
      f.path = top.path;
      f.path.push_back(static_cast<int>(top.cursor));
      f.prefix = top.prefix;
      ++top.cursor;
      frames_.push_back(std::move(f));
      return;
    }
    default:
      throw std::logic_error("slot on a non-token field");
  }
}

Interpreter::StepResult Interpreter::Step(const Triplet& t) {
  const std::string why = CheckToken(t);
  if (!why.empty()) throw IllegalTokenError(why);
  StepResult result;
  result.context = {slot_.field_id, slot_.n, slot_.m, false, -1};
  ++m_;
  if (t.f) {
    CloseSpeculative();
  } else {
    Write(t);
  }
  Advance();
  result.referrables = std::move(pending_refs_);
  pending_refs_.clear();
  return result;
}

bool Interpreter::at_object_boundary() const {
  if (terminal()) return true;
  return frames_.size() >= 2 && frames_[1].is_root_list &&
         (frames_[1].speculative || frames_.size() == 2);
}

Sketch Interpreter::ToSketch() const {
  if (!terminal()) throw std::logic_error("sketch is not complete");
  return SketchFromValue(root_);
}

Sketch Interpreter::PartialSketch() const {
  Sketch s;
  if (root_.items.empty() || !root_.items[0].is_set()) return s;
  const Value& list = root_.items[0];
  for (size_t i = 0; i < completed_objects_; ++i) s.objects.push_back(ObjectFromValue(list.items[i]));
  return s;
}

// ------------------------------------------------------------------------------ encode

namespace {

class Encoder {
 public:
  explicit Encoder(const SchemaRegistry& schema) : schema_(schema) {}

  std::vector<Token> Run(const Value& root) {
    const MessageSpec& msg = schema_.Root();
    Fields(&msg, msg.fields.data(), msg.fields.size(), root, "", true);
    return std::move(out_);
  }

 private:
  void Emit(const std::string& field_id, Triplet t) {
    Token tok;
    tok.t = t;
    tok.ctx = {field_id, n_, m_++, false, -1};
    out_.push_back(std::move(tok));
  }

  static Triplet ScalarTriplet(const FieldSpec& f, const Value& v) {
    switch (f.kind) {
      case FieldKind::kBool:
        return Triplet::Discrete(v.boolean ? 1 : 0);
      case FieldKind::kReal:
        return Triplet::Continuous(v.real);
      default:
        return Triplet::Discrete(v.integer);
    }
  }

  void Fields(const MessageSpec* msg, const FieldSpec* fields, size_t num, const Value& v,
              const std::string& prefix, bool is_root) {
    for (size_t i = 0; i < num; ++i) {
      const FieldSpec& f = fields[i];
      const Value& fv = v.items[i];
      switch (f.kind) {
        case FieldKind::kMessage: {
          const MessageSpec& sub = schema_.Message(f.message);
          Fields(&sub, sub.fields.data(), sub.fields.size(), fv, prefix + f.name + ".", false);
          break;
        }
        case FieldKind::kOneof: {
          const std::optional<int> resolved = msg ? ResolveOneofBranch(*msg, v) : std::nullopt;
          if (!resolved) {
            Emit(prefix + f.name, Triplet::Discrete(fv.branch));
          } else if (*resolved != fv.branch) {
            throw InvalidSketchError(prefix + f.name + ": branch disagrees with handler");
          }
          Fields(nullptr, &f.branches[fv.branch], 1, fv, prefix, false);
          break;
        }
        case FieldKind::kRepeated: {
          const std::string list_id = prefix + f.name;
          const FieldSpec& elem = *f.element;
          for (size_t k = 0; k < fv.items.size(); ++k) {
            if (is_root) {
              n_ = static_cast<int>(k);
              m_ = 0;
            }
            const Value& item = fv.items[k];
            if (elem.IsScalar()) {
              Emit(list_id, ScalarTriplet(elem, item));
            } else {
              const MessageSpec& sub = schema_.Message(elem.message);
              Fields(&sub, sub.fields.data(), sub.fields.size(), item, list_id + ".", false);
            }
            if (is_root) EmitReferrables(item);
          }
          if (is_root) {
            n_ = static_cast<int>(fv.items.size());
            m_ = 0;
          }
          Emit(ElementFirstFieldId(schema_, f, list_id), Triplet::End());
          break;
        }
        default:
          Emit(prefix + f.name, ScalarTriplet(f, fv));
      }
    }
  }

  void EmitReferrables(const Value& object_value) {
    const Object o = ObjectFromValue(object_value);
    if (!IsEntity(o)) return;
    const Entity& e = AsEntity(o);
    const std::string id = RefFieldId(KindOf(e));
    const auto parts = ReferrableParts(e);
    for (size_t k = 0; k < parts.size(); ++k) {
      Token tok;
      tok.t = Triplet::Discrete(static_cast<int64_t>(k));
      tok.ctx = {id, n_, m_++, true, static_cast<int>(k)};
      out_.push_back(std::move(tok));
    }
  }

  const SchemaRegistry& schema_;
  std::vector<Token> out_;
  int n_ = 0;
  int m_ = 0;
};

}  // namespace

std::vector<Token> Encode(const Sketch& s) {
  const auto report = ValidateSketch(s, Ordering::kInterleaved);
  if (!report.empty()) throw InvalidSketchError("invalid sketch:\n" + FormatReport(report));
  return Encoder(BuiltinSketchSchema()).Run(SketchToValue(s));
}

std::vector<Triplet> PredictedTriplets(const std::vector<Token>& tokens) {
  std::vector<Triplet> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!t.ctx.is_referrable) out.push_back(t.t);
  }
  return out;
}

Sketch Decode(std::span<const Triplet> tokens) {
  Interpreter it;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string why = it.CheckToken(tokens[i]);
    if (!why.empty()) throw DecodeError(i, why);
    it.Step(tokens[i]);
  }
  if (!it.terminal()) throw DecodeError(tokens.size(), "sequence ended before the sketch closed");
  return it.ToSketch();
}

std::vector<AnnotatedToken> Annotate(std::span<const Triplet> tokens) {
  Interpreter it;
  std::vector<AnnotatedToken> out;
  out.reserve(tokens.size() * 3 / 2);
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string why = it.CheckToken(tokens[i]);
    if (!why.empty()) throw DecodeError(i, why);
    AnnotatedToken a;
    a.slot = it.slot();
    auto step = it.Step(tokens[i]);
    a.token = {tokens[i], std::move(step.context)};
    out.push_back(std::move(a));
    for (auto& r : step.referrables) out.push_back({std::move(r), Slot{}});
  }
  return out;
}

// ---------------------------------------------------------------------------- field ids

namespace {

void CollectFieldIds(const SchemaRegistry& schema, const MessageSpec& msg, const std::string& prefix,
                     std::vector<std::string>* out) {
  for (const FieldSpec& f : msg.fields) {
    switch (f.kind) {
      case FieldKind::kMessage:
        CollectFieldIds(schema, schema.Message(f.message), prefix + f.name + ".", out);
        break;
      case FieldKind::kOneof:
        if (!msg.handler) out->push_back(prefix + f.name);
        for (const FieldSpec& b : f.branches) {
          if (b.kind == FieldKind::kMessage) {
            CollectFieldIds(schema, schema.Message(b.message), prefix + b.name + ".", out);
          } else {
            out->push_back(prefix + b.name);
          }
        }
        break;
      case FieldKind::kRepeated:
        if (f.element->kind == FieldKind::kMessage) {
          CollectFieldIds(schema, schema.Message(f.element->message), prefix + f.name + ".", out);
        } else {
          out->push_back(prefix + f.name);
        }
        break;
      default:
        out->push_back(prefix + f.name);
    }
  }
}

}  // namespace

const std::vector<std::string>& FieldIds() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> raw;
    const SchemaRegistry& schema = BuiltinSketchSchema();
    CollectFieldIds(schema, schema.Root(), "", &raw);
    for (int k = 0; k < kNumEntityKinds; ++k) raw.push_back(RefFieldId(static_cast<EntityKind>(k)));
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& id : raw) {
      if (seen.insert(id).second) out.push_back(id);
    }
    return out;
  }();
  return ids;
}

int FieldIdIndex(const std::string& field_id) {
  static const std::map<std::string, int> index = [] {
    std::map<std::string, int> m;
    const auto& ids = FieldIds();
    for (size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], static_cast<int>(i));
    return m;
  }();
  auto it = index.find(field_id);
  if (it == index.end()) throw std::invalid_argument("unknown field id '" + field_id + "'");
  return it->second;
}

// ----------------------------------------------------------------------------- reorder

Sketch Reorder(const Sketch& s, Ordering mode) {
  const ReferrableTable full = BuildReferrableTable(s);
  std::vector<size_t> entity_objects;
  std::vector<std::vector<size_t>> after_entity;  // constraints to place after entity k
  std::vector<size_t> all_constraints;
  size_t prefix_size = 0;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const Object& o = s.objects[i];
    if (IsEntity(o)) {
      entity_objects.push_back(i);
      after_entity.emplace_back();
      prefix_size += ReferrableParts(AsEntity(o)).size();
      continue;
    }
    const auto pointers = PointersOf(AsConstraint(o));
    size_t last = 0;
    for (Pointer p : pointers) {
      if (p >= prefix_size) {
        throw ReorderError("object " + std::to_string(i) + " references pointer " +
                           std::to_string(p) + " beyond the entities preceding it");
      }
      last = std::max<size_t>(last, full.entries[p].entity_ordinal);
    }
    all_constraints.push_back(i);
    after_entity[last].push_back(i);
  }

  Sketch out;
  if (mode == Ordering::kConcatenated) {
    for (size_t i : entity_objects) out.objects.push_back(s.objects[i]);
    for (size_t i : all_constraints) out.objects.push_back(s.objects[i]);
  } else {
    for (size_t k = 0; k < entity_objects.size(); ++k) {
      out.objects.push_back(s.objects[entity_objects[k]]);
      for (size_t i : after_entity[k]) out.objects.push_back(s.objects[i]);
    }
  }
  // Entity order is preserved, so every pointer still names the same part; the prefix tables
  // at the new positions must still contain it.
  const auto report = ValidateSketch(out, Ordering::kInterleaved);
  if (!report.empty()) throw std::logic_error("reorder broke pointers:\n" + FormatReport(report));
  return out;
}

// -------------------------------------------------------------------------- text format

void WriteTokenText(std::ostream& os, const std::vector<Token>& tokens) {
  char buf[64];
  for (const auto& t : tokens) {
    if (t.ctx.is_referrable) continue;
    std::snprintf(buf, sizeof(buf), "%.17g", t.t.c);
    os << t.t.d << ' ' << buf << ' ' << (t.t.f ? 1 : 0) << ' ' << t.ctx.field_id << ' '
       << t.ctx.n << ' ' << t.ctx.m << '\n';
  }
}

std::vector<Triplet> ReadTokenText(std::istream& is) {
  std::vector<Triplet> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Triplet t;
    std::string f;
    if (!(ls >> t.d >> t.c >> f)) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected `d c f ...`");
    }
    if (f == "1" || f == "true" || f == "True") {
      t.f = true;
    } else if (f == "0" || f == "false" || f == "False") {
      t.f = false;
    } else {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": bad end flag '" + f + "'");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace sketchgen
