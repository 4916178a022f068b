#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genckpt/agent.hpp"
#include "genckpt/channel.hpp"
#include "genckpt/precious.hpp"
#include "genckpt/store.hpp"

namespace genckpt {

enum class CkptPhase {
  kIdle,
  kQuiesce,
  kWriting,
  kBarrier,
  kCommitting,
  kPruning,
  kResuming,
  kAborted,
};

const char* to_string(CkptPhase p);

struct ProcessCkptStats {
  std::uint64_t image_bytes = 0;
  double write_duration_s = 0;
};

struct CheckpointReport {
  enum class Outcome { kCommitted, kAborted, kTimedOut };

  Outcome outcome = Outcome::kAborted;
  std::optional<GenerationId> generation;
  std::map<int, ProcessCkptStats> per_process;
  std::uint64_t precious_bytes = 0;
  double precious_duration_s = 0;
  double barrier_wait_s = 0;
  std::vector<GenerationId> pruned;
  std::string abort_reason;
};

struct RestoreReport {
  GenerationId generation;
  std::vector<int> restored_pids;
  PreciousRestoreOutcome precious;
};

struct CoordinatorOptions {
  std::chrono::milliseconds agent_timeout{5000};
  int keep_k = 2;
  /// Stages the precious set into the open generation (runs during the
  /// writing phase, coordinator side). Optional.
  std::function<std::vector<PreciousFileRecord>(StagingHandle&)> precious_stager;
  /// Restores precious backups into the application namespace before agents
  /// reload their images. Optional.
  std::function<PreciousRestoreOutcome(const CheckpointManifest&)> precious_restorer;
};

/// Drives the global checkpoint protocol over one channel per agent:
/// quiesce -> write -> barrier -> commit -> prune -> resume. A checkpoint is
/// all-or-nothing: any agent failure or timeout aborts the whole instance
/// and the previously committed generation stays authoritative.
class Coordinator {
 public:
  Coordinator(GenerationStore& store, CoordinatorOptions opts = {});

  /// Completes the registration handshake on a freshly connected channel.
  /// Every registration is assigned a fresh process id. Throws Busy while a
  /// checkpoint is in flight.
  int accept_agent(std::unique_ptr<Channel> channel);

  CheckpointReport run_checkpoint();

  /// Restores the given generation (default: latest committed). Refuses if
  /// the registered agent count does not match the manifest. Idempotent.
  RestoreReport run_restore(std::optional<std::uint64_t> index = std::nullopt);

  CkptPhase phase() const { return phase_; }
  int agent_count() const { return static_cast<int>(agents_.size()); }
  std::vector<int> agent_ids() const;

 private:
  struct AgentHandle {
    int process_id = 0;
    std::unique_ptr<Channel> channel;
  };

  /// Waits for one message of the given type from one agent; anything else
  /// is a protocol violation.
  std::optional<Message> expect(AgentHandle& agent, MsgType type);

  void abort_all(const std::string& reason);
  void drop_dead_agents();

  GenerationStore& store_;
  CoordinatorOptions opts_;
  CkptPhase phase_ = CkptPhase::kIdle;
  std::vector<AgentHandle> agents_;
  std::vector<int> dead_;  // marked during a failed round, dropped after
  int next_pid_ = 1;
};

struct AgentCallbacks {
  /// Pauses application work and returns the registered state sections.
  std::function<std::vector<SectionView>()> quiesce;
  /// Resumes application work (after commit or abort).
  std::function<void()> resume;
  /// Applies restored sections to application state.
  std::function<void(std::vector<StateSection>)> apply_restore;
};

/// Agent-side protocol loop. Shares the generation store with the
/// coordinator (same root), staging its own image into the open generation.
class AgentRuntime {
 public:
  AgentRuntime(std::unique_ptr<Channel> channel, GenerationStore& store, AgentCallbacks cbs);

  /// Sends REGISTER and waits for the ack carrying this agent's process id.
  void register_with_coordinator(std::chrono::milliseconds timeout);

  int process_id() const { return process_id_; }

  /// Handles a single inbound message (a full checkpoint round for
  /// CKPT_REQUEST). Returns false on timeout with nothing received.
  bool serve_one(std::chrono::milliseconds timeout);

  void close() { channel_->close(); }

 private:
  void handle_checkpoint(std::uint64_t gen_index);
  void handle_restore(std::uint64_t gen_index);

  std::unique_ptr<Channel> channel_;
  GenerationStore& store_;
  AgentCallbacks cbs_;
  int process_id_ = 0;
};

}  // namespace genckpt
