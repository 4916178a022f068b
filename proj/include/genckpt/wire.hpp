#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "genckpt/digest.hpp"

namespace genckpt {

// Frame layout: version byte (0x01), type byte, u32 LE payload length,
// payload. Integers inside payloads are u64 LE; strings are u32 LE length
// followed by UTF-8 bytes; digests are 32 raw bytes.
inline constexpr std::uint8_t kWireVersion = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 6;
inline constexpr std::uint32_t kMaxPayloadSize = 1u << 20;

enum class MsgType : std::uint8_t {
  kRegister = 0x01,
  kRegisterAck = 0x02,
  kCkptRequest = 0x03,
  kQuiesceAck = 0x04,
  kImageStaged = 0x05,
  kCommitDone = 0x06,
  kResume = 0x07,
  kRestore = 0x08,
  kRestoreAck = 0x09,
  kAbort = 0x0a,
};

const char* to_string(MsgType t);

struct Message {
  MsgType type = MsgType::kRegister;
  std::uint64_t process_id = 0;  // register_ack, quiesce_ack, image_staged, restore_ack
  std::uint64_t generation = 0;  // ckpt_request, commit_done, restore
  std::uint64_t byte_count = 0;  // image_staged
  Digest digest{};               // image_staged
  std::string reason;            // abort

  bool operator==(const Message&) const = default;
};

/// Serializes a message into a complete frame (header + payload).
std::vector<std::byte> encode_frame(const Message& msg);

/// Parses a complete frame. Throws ProtocolError on bad version, unknown
/// type, or a payload that does not match the type's layout.
Message decode_frame(std::span<const std::byte> frame);

/// Reads the payload length out of a frame header, validating version.
std::uint32_t payload_length(std::span<const std::byte, kFrameHeaderSize> header);

}  // namespace genckpt
