/*!
 * \file tests/oracle/wire_oracle_test.cc
 * \brief Cross-checks the hand-written wire codec against libprotobuf on random sketches.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <map>
#include <string>

#include <google/protobuf/descriptor.h>
#include <google/protobuf/message.h>

#include "sketch_oracle.pb.h"
#include "sketchgen/synth.h"
#include "sketchgen/wire.h"

namespace sketchgen {

namespace {

namespace pb = google::protobuf;

void Fill(const SchemaRegistry& schema, const MessageSpec& spec, const Value& v, pb::Message* out);

void SetSingle(const SchemaRegistry& schema, const FieldSpec& f, const Value& v, pb::Message* out) {
  const pb::Descriptor* d = out->GetDescriptor();
  const pb::FieldDescriptor* fd = d->FindFieldByNumber(f.number);
  REQUIRE_MESSAGE(fd != nullptr, d->full_name() << " lacks field " << f.number);
  REQUIRE(fd->name() == f.name);
  const pb::Reflection* r = out->GetReflection();
  const bool repeated = fd->is_repeated();
  switch (fd->cpp_type()) {
    case pb::FieldDescriptor::CPPTYPE_BOOL:
      repeated ? r->AddBool(out, fd, v.boolean) : r->SetBool(out, fd, v.boolean);
      break;
    case pb::FieldDescriptor::CPPTYPE_UINT32:
      repeated ? r->AddUInt32(out, fd, static_cast<uint32_t>(v.integer))
               : r->SetUInt32(out, fd, static_cast<uint32_t>(v.integer));
      break;
    case pb::FieldDescriptor::CPPTYPE_DOUBLE:
      repeated ? r->AddDouble(out, fd, v.real) : r->SetDouble(out, fd, v.real);
      break;
    case pb::FieldDescriptor::CPPTYPE_ENUM:
      r->SetEnumValue(out, fd, static_cast<int>(v.integer));
      break;
    case pb::FieldDescriptor::CPPTYPE_MESSAGE: {
      pb::Message* sub = repeated ? r->AddMessage(out, fd) : r->MutableMessage(out, fd);
      Fill(schema, schema.Message(f.message), v, sub);
      break;
    }
    default:
      FAIL("unexpected field type");
  }
}

void Fill(const SchemaRegistry& schema, const MessageSpec& spec, const Value& v, pb::Message* out) {
  for (size_t i = 0; i < spec.fields.size(); ++i) {
    const FieldSpec& f = spec.fields[i];
    const Value& fv = v.items[i];
    if (f.kind == FieldKind::kOneof) {
      SetSingle(schema, f.branches[fv.branch], fv.items[0], out);
    } else if (f.kind == FieldKind::kRepeated) {
      for (const Value& item : fv.items) SetSingle(schema, *f.element, item, out);
    } else {
      SetSingle(schema, f, fv, out);
    }
  }
}

std::string AsString(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace

TEST_CASE("wire codec agrees with libprotobuf") {
  const SchemaRegistry& schema = BuiltinSketchSchema();
  std::mt19937_64 rng(2024);
  std::map<std::string, Sketch> seen;
  for (int i = 0; i < 10000; ++i) {
    RandomSketchOptions opt;
    opt.min_entities = 0;
    const Sketch s = RandomSketch(rng, opt);
    const Bytes ours = Serialize(s);

    oracle::Sketch reference;
    Fill(schema, schema.Root(), SketchToValue(s), &reference);
    std::string theirs;
    REQUIRE(reference.SerializeToString(&theirs));
    REQUIRE(AsString(ours) == theirs);

    oracle::Sketch reparsed;
    REQUIRE(reparsed.ParseFromString(AsString(ours)));
    std::string again;
    reparsed.SerializeToString(&again);
    CHECK(again == theirs);

    CHECK(Parse(ours) == s);
    // Injective: equal bytes only for equal sketches.
    auto [it, inserted] = seen.emplace(AsString(ours), s);
    if (!inserted) CHECK(it->second == s);
  }
  CHECK(seen.size() > 5000);
}

TEST_CASE("point entity example against libprotobuf") {
  oracle::PointEntity p;
  p.set_is_construction(true);
  p.mutable_point()->set_x(0.0);
  p.mutable_point()->set_y(0.0);
  std::string bytes;
  p.SerializeToString(&bytes);
  std::string expected = {0x08, 0x01, 0x12, 0x12, 0x09};
  expected += std::string(8, '\0');
  expected += '\x11';
  expected += std::string(8, '\0');
  CHECK(bytes == expected);
}

}  // namespace sketchgen
