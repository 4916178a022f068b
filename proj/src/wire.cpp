#include "genckpt/wire.hpp"

#include <cstring>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

void put_string(std::vector<std::byte>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  for (char c : s) out.push_back(std::byte(static_cast<unsigned char>(c)));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::byte> data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::to_integer<unsigned>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<unsigned>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  Digest digest() {
    need(32);
    Digest d;
    std::memcpy(d.bytes.data(), data_.data() + pos_, 32);
    pos_ += 32;
    return d;
  }

  std::string string() {
    auto len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  void finish() const {
    if (pos_ != data_.size()) throw ProtocolError("trailing bytes in payload");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ProtocolError("truncated payload");
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

bool known_type(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(MsgType::kRegister) &&
         t <= static_cast<std::uint8_t>(MsgType::kAbort);
}

}  // namespace

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::kRegister: return "register";
    case MsgType::kRegisterAck: return "register_ack";
    case MsgType::kCkptRequest: return "ckpt_request";
    case MsgType::kQuiesceAck: return "quiesce_ack";
    case MsgType::kImageStaged: return "image_staged";
    case MsgType::kCommitDone: return "commit_done";
    case MsgType::kResume: return "resume";
    case MsgType::kRestore: return "restore";
    case MsgType::kRestoreAck: return "restore_ack";
    case MsgType::kAbort: return "abort";
  }
  return "unknown";
}

std::vector<std::byte> encode_frame(const Message& msg) {
  std::vector<std::byte> payload;
  switch (msg.type) {
    case MsgType::kRegister:
    case MsgType::kResume:
      break;
    case MsgType::kRegisterAck:
    case MsgType::kQuiesceAck:
    case MsgType::kRestoreAck:
      put_u64(payload, msg.process_id);
      break;
    case MsgType::kCkptRequest:
    case MsgType::kCommitDone:
    case MsgType::kRestore:
      put_u64(payload, msg.generation);
      break;
    case MsgType::kImageStaged:
      put_u64(payload, msg.process_id);
      put_u64(payload, msg.byte_count);
      payload.insert(payload.end(),
                     reinterpret_cast<const std::byte*>(msg.digest.bytes.data()),
                     reinterpret_cast<const std::byte*>(msg.digest.bytes.data()) + 32);
      break;
    case MsgType::kAbort:
      put_string(payload, msg.reason);
      break;
  }

  std::vector<std::byte> frame;
  frame.reserve(kFrameHeaderSize + payload.size());
  frame.push_back(std::byte{kWireVersion});
  frame.push_back(std::byte{static_cast<std::uint8_t>(msg.type)});
  put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

std::uint32_t payload_length(std::span<const std::byte, kFrameHeaderSize> header) {
  if (std::to_integer<std::uint8_t>(header[0]) != kWireVersion)
    throw ProtocolError("unsupported wire version");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i)
    len |= std::uint32_t(std::to_integer<unsigned>(header[2 + i])) << (8 * i);
  if (len > kMaxPayloadSize) throw ProtocolError("payload length exceeds limit");
  return len;
}

Message decode_frame(std::span<const std::byte> frame) {
  if (frame.size() < kFrameHeaderSize) throw ProtocolError("frame shorter than header");
  auto len = payload_length(frame.subspan<0, kFrameHeaderSize>());
  const auto type_byte = std::to_integer<std::uint8_t>(frame[1]);
  if (!known_type(type_byte))
    throw ProtocolError("unknown message type " + std::to_string(type_byte));
  if (frame.size() != kFrameHeaderSize + len)
    throw ProtocolError("frame length does not match header");

  Message msg;
  msg.type = static_cast<MsgType>(type_byte);
  Cursor cur(frame.subspan(kFrameHeaderSize));
  switch (msg.type) {
    case MsgType::kRegister:
    case MsgType::kResume:
      break;
    case MsgType::kRegisterAck:
    case MsgType::kQuiesceAck:
    case MsgType::kRestoreAck:
      msg.process_id = cur.u64();
      break;
    case MsgType::kCkptRequest:
    case MsgType::kCommitDone:
    case MsgType::kRestore:
      msg.generation = cur.u64();
      break;
    case MsgType::kImageStaged:
      msg.process_id = cur.u64();
      msg.byte_count = cur.u64();
      msg.digest = cur.digest();
      break;
    case MsgType::kAbort:
      msg.reason = cur.string();
      break;
  }
  cur.finish();
  return msg;
}

}  // namespace genckpt
