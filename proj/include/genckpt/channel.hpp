#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>

#include "genckpt/wire.hpp"

namespace genckpt {

/// Bidirectional message transport between a coordinator and one agent.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual void send(const Message& msg) = 0;

  /// Blocks until a message arrives or the timeout elapses; returns nullopt
  /// on timeout. Throws ProtocolError if the peer closed or the stream is
  /// malformed.
  virtual std::optional<Message> recv(std::chrono::milliseconds timeout) = 0;

  virtual void close() = 0;
};

/// Creates a connected pair of in-process channels backed by two queues.
/// Messages still pass through the wire codec so the framed representation
/// is exercised on every hop.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_channel_pair();

/// Wraps a connected stream socket (e.g. one end of socketpair(AF_UNIX) or
/// an accepted unix-domain connection). Takes ownership of the descriptor.
std::unique_ptr<Channel> make_socket_channel(int fd);

/// Creates a connected unix-domain socket pair wrapped in channels.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_socket_channel_pair();

}  // namespace genckpt
