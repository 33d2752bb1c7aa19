#include <gtest/gtest.h>

#include "shopsim/protocol.hpp"
#include "test_support.hpp"

using namespace shopsim;
using namespace shopsim::proto;
namespace tu = shopsim::testing;

namespace {

DecodeErrc error_of(std::string_view frame) {
  auto r = decode_frame(frame);
  if (auto* e = std::get_if<DecodeError>(&r)) return e->code;
  ADD_FAILURE() << "decoded: " << frame;
  return DecodeErrc::MalformedJson;
}

Message ok(std::string_view frame) {
  auto r = decode_frame(frame);
  if (auto* e = std::get_if<DecodeError>(&r)) {
    ADD_FAILURE() << to_string(e->code) << ": " << e->reason;
    return {};
  }
  return std::get<Message>(r);
}

}  // namespace

TEST(Encode, CanonicalKeyOrderAndNewline) {
  EXPECT_EQ(encode_frame(make(MsgType::PONG, 3, 1000)), "{\"seq\":3,\"ts_ms\":1000,\"type\":\"PONG\",\"v\":1}\n");
  EXPECT_EQ(encode_frame(make(MsgType::ACK, 8, 0, json{{"ref_seq", 7}})),
            "{\"ref_seq\":7,\"seq\":8,\"ts_ms\":0,\"type\":\"ACK\",\"v\":1}\n");
}

TEST(Decode, AcceptsHelloWithOrWithoutNewline) {
  const char* f = R"({"v":1,"type":"HELLO","seq":1,"ts_ms":0,"token":"t","role":"Viewer"})";
  const Message a = ok(f);
  const Message b = ok(std::string(f) + "\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.type, MsgType::HELLO);
  EXPECT_EQ(a.body, (json{{"token", "t"}, {"role", "Viewer"}}));
}

TEST(Decode, ErrorClasses) {
  EXPECT_EQ(error_of("not json"), DecodeErrc::MalformedJson);
  EXPECT_EQ(error_of("[1,2]"), DecodeErrc::MalformedJson);
  EXPECT_EQ(error_of(""), DecodeErrc::MalformedJson);
  EXPECT_EQ(error_of("{\"v\":1,\n\"type\":\"PING\",\"seq\":1,\"ts_ms\":0}"), DecodeErrc::MalformedJson);
  EXPECT_EQ(error_of(R"({"type":"PING","seq":1,"ts_ms":0})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":2,"type":"PING","seq":1,"ts_ms":0})"), DecodeErrc::BadVersion);
  EXPECT_EQ(error_of(R"({"v":"1","type":"PING","seq":1,"ts_ms":0})"), DecodeErrc::BadVersion);
  EXPECT_EQ(error_of(R"({"v":1,"type":"SHOUT","seq":1,"ts_ms":0})"), DecodeErrc::UnknownType);
  EXPECT_EQ(error_of(R"({"v":1,"seq":1,"ts_ms":0})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"PING","ts_ms":0})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"PING","seq":-1,"ts_ms":0})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"PING","seq":1})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"COMMAND","seq":1,"ts_ms":0,"device_id":"fan-1"})"), DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"COMMAND","seq":1,"ts_ms":0,"device_id":"fan-1","action":3})"),
            DecodeErrc::MissingField);
  EXPECT_EQ(error_of(R"({"v":1,"type":"SUBSCRIBE","seq":1,"ts_ms":0,"patterns":["a",2]})"), DecodeErrc::MissingField);
}

TEST(Decode, KeepsSeqWhenHeaderIsReadable) {
  auto r = decode_frame(R"({"v":2,"type":"PING","seq":41,"ts_ms":0})");
  ASSERT_TRUE(std::holds_alternative<DecodeError>(r));
  EXPECT_EQ(std::get<DecodeError>(r).seq, 41u);
}

TEST(Decode, OversizeFrameIsRejectedBeforeParsing) {
  std::string big = R"({"v":1,"type":"PING","seq":1,"ts_ms":0,"pad":")" + std::string(70 * 1024, 'x') + "\"}";
  EXPECT_EQ(error_of(big), DecodeErrc::FrameTooLong);
  std::string edge(kMaxFrameBytes + 1, ' ');
  EXPECT_EQ(error_of(edge), DecodeErrc::FrameTooLong);
}

TEST(Decode, ExtensionMembersSurvive) {
  const Message m = ok(R"({"v":1,"type":"PING","seq":1,"ts_ms":0,"x_trace":"abc"})");
  EXPECT_EQ(m.body, (json{{"x_trace", "abc"}}));
  EXPECT_EQ(ok(encode_frame(m)), m);
}

TEST(Types, NamesRoundTrip) {
  for (MsgType t : kAllTypes) EXPECT_EQ(type_from_string(to_string(t)), t);
  EXPECT_FALSE(type_from_string("ping"));
}

// Property: decode(encode(m)) == m for schema-valid messages.
TEST(ProtocolProperties, RoundTrip) {
  tu::Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    const Message m = tu::random_message(rng);
    const std::string frame = encode_frame(m);
    ASSERT_EQ(frame.find('\n'), frame.size() - 1);
    EXPECT_EQ(ok(frame), m) << frame;
  }
}

// Property: mutated frames always come back as a Message or a DecodeError,
// and any Message that does come back re-encodes to something decodable.
TEST(ProtocolProperties, MutatedFramesNeverCrash) {
  tu::Rng rng(100);
  int errors = 0;
  for (int i = 0; i < 30000; ++i) {
    const std::string frame = tu::mutate(rng, encode_frame(tu::random_message(rng)));
    auto r = decode_frame(frame);
    if (auto* m = std::get_if<Message>(&r)) EXPECT_EQ(ok(encode_frame(*m)), *m);
    else ++errors;
  }
  EXPECT_GT(errors, 0);
}
