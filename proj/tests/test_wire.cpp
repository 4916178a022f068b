#include <chrono>
#include <thread>

#include "doctest.h"
#include "genckpt/channel.hpp"
#include "genckpt/errors.hpp"
#include "genckpt/wire.hpp"

using namespace genckpt;
using namespace std::chrono_literals;

TEST_CASE("register frame has the exact expected bytes") {
  Message msg;
  msg.type = MsgType::kRegister;
  auto frame = encode_frame(msg);
  std::vector<std::byte> expected{std::byte{0x01}, std::byte{0x01}, std::byte{0x00},
                                  std::byte{0x00}, std::byte{0x00}, std::byte{0x00}};
  CHECK(frame == expected);
}

TEST_CASE("ckpt_request frame encodes the generation little-endian") {
  Message msg;
  msg.type = MsgType::kCkptRequest;
  msg.generation = 0x0102030405060708ull;
  auto frame = encode_frame(msg);
  REQUIRE(frame.size() == kFrameHeaderSize + 8);
  CHECK(frame[0] == std::byte{0x01});
  CHECK(frame[1] == std::byte{0x03});
  CHECK(frame[2] == std::byte{0x08});  // payload length 8
  CHECK(frame[6] == std::byte{0x08});  // least significant byte first
  CHECK(frame[13] == std::byte{0x01});
}

TEST_CASE("every message type round-trips") {
  Digest d = sha256(std::string_view("payload"));
  std::vector<Message> msgs{
      {MsgType::kRegister, 0, 0, 0, {}, ""},
      {MsgType::kRegisterAck, 42, 0, 0, {}, ""},
      {MsgType::kCkptRequest, 0, 7, 0, {}, ""},
      {MsgType::kQuiesceAck, 3, 0, 0, {}, ""},
      {MsgType::kImageStaged, 3, 0, 1 << 20, d, ""},
      {MsgType::kCommitDone, 0, 7, 0, {}, ""},
      {MsgType::kResume, 0, 0, 0, {}, ""},
      {MsgType::kRestore, 0, 6, 0, {}, ""},
      {MsgType::kRestoreAck, 2, 0, 0, {}, ""},
      {MsgType::kAbort, 0, 0, 0, {}, "agent 3 lost"},
  };
  for (const auto& m : msgs) {
    auto decoded = decode_frame(encode_frame(m));
    CHECK(decoded == m);
  }
}

TEST_CASE("malformed frames are rejected") {
  Message msg;
  msg.type = MsgType::kImageStaged;
  msg.process_id = 1;
  msg.byte_count = 100;
  auto frame = encode_frame(msg);

  SUBCASE("bad version") {
    frame[0] = std::byte{0x02};
    CHECK_THROWS_AS(decode_frame(frame), ProtocolError);
  }
  SUBCASE("unknown type") {
    frame[1] = std::byte{0x7f};
    CHECK_THROWS_AS(decode_frame(frame), ProtocolError);
  }
  SUBCASE("truncated payload") {
    frame.resize(frame.size() - 1);
    CHECK_THROWS_AS(decode_frame(frame), ProtocolError);
  }
  SUBCASE("extra payload bytes") {
    frame.push_back(std::byte{0});
    CHECK_THROWS_AS(decode_frame(frame), ProtocolError);
  }
  SUBCASE("payload shorter than the type requires") {
    Message r;
    r.type = MsgType::kRegisterAck;
    auto f = encode_frame(r);
    f[1] = static_cast<std::byte>(MsgType::kImageStaged);
    CHECK_THROWS_AS(decode_frame(f), ProtocolError);
  }
  SUBCASE("shorter than a header") {
    CHECK_THROWS_AS(decode_frame(std::vector<std::byte>(3)), ProtocolError);
  }
}

TEST_CASE("abort reason string survives arbitrary content") {
  Message msg;
  msg.type = MsgType::kAbort;
  msg.reason = std::string("line1\nline2\ttab\0nul", 19);
  CHECK(decode_frame(encode_frame(msg)) == msg);
}

namespace {

void exercise_pair(Channel& a, Channel& b) {
  Message req;
  req.type = MsgType::kCkptRequest;
  req.generation = 11;
  a.send(req);

  Message ack;
  ack.type = MsgType::kQuiesceAck;
  ack.process_id = 5;
  b.send(ack);

  auto got_b = b.recv(1000ms);
  REQUIRE(got_b.has_value());
  CHECK(*got_b == req);

  auto got_a = a.recv(1000ms);
  REQUIRE(got_a.has_value());
  CHECK(*got_a == ack);

  CHECK_FALSE(a.recv(10ms).has_value());  // timeout, not an error
}

}  // namespace

TEST_CASE("in-process channel pair delivers messages both ways") {
  auto [a, b] = make_channel_pair();
  exercise_pair(*a, *b);
}

TEST_CASE("socket channel pair delivers messages both ways") {
  auto [a, b] = make_socket_channel_pair();
  exercise_pair(*a, *b);
}

TEST_CASE("socket channel reassembles large frames across reads") {
  auto [a, b] = make_socket_channel_pair();
  Message msg;
  msg.type = MsgType::kAbort;
  msg.reason = std::string(512 * 1024, 'x');
  std::thread sender([&] { a->send(msg); });
  auto got = b->recv(5000ms);
  sender.join();
  REQUIRE(got.has_value());
  CHECK(*got == msg);
}

TEST_CASE("recv after peer close raises ProtocolError") {
  auto [a, b] = make_socket_channel_pair();
  a->close();
  CHECK_THROWS_AS(b->recv(1000ms), ProtocolError);
}
