#include "genckpt/coordinator.hpp"

#include <algorithm>

#include "genckpt/content.hpp"
#include "genckpt/errors.hpp"

namespace genckpt {

const char* to_string(CkptPhase p) {
  switch (p) {
    case CkptPhase::kIdle: return "idle";
    case CkptPhase::kQuiesce: return "quiesce";
    case CkptPhase::kWriting: return "writing";
    case CkptPhase::kBarrier: return "barrier";
    case CkptPhase::kCommitting: return "committing";
    case CkptPhase::kPruning: return "pruning";
    case CkptPhase::kResuming: return "resuming";
    case CkptPhase::kAborted: return "aborted";
  }
  return "unknown";
}

Coordinator::Coordinator(GenerationStore& store, CoordinatorOptions opts)
    : store_(store), opts_(std::move(opts)) {}

int Coordinator::accept_agent(std::unique_ptr<Channel> channel) {
  if (phase_ != CkptPhase::kIdle && phase_ != CkptPhase::kAborted)
    throw Busy("registration refused during checkpoint phase " + std::string(to_string(phase_)));
  auto msg = channel->recv(opts_.agent_timeout);
  if (!msg) throw ProtocolError("timed out waiting for REGISTER");
  if (msg->type != MsgType::kRegister)
    throw ProtocolError(std::string("expected REGISTER, got ") + to_string(msg->type));
  const int pid = next_pid_++;
  Message ack;
  ack.type = MsgType::kRegisterAck;
  ack.process_id = static_cast<std::uint64_t>(pid);
  channel->send(ack);
  agents_.push_back({pid, std::move(channel)});
  return pid;
}

std::vector<int> Coordinator::agent_ids() const {
  std::vector<int> ids;
  for (const auto& a : agents_) ids.push_back(a.process_id);
  return ids;
}

std::optional<Message> Coordinator::expect(AgentHandle& agent, MsgType type) {
  std::optional<Message> msg;
  try {
    msg = agent.channel->recv(opts_.agent_timeout);
  } catch (const Error&) {
    dead_.push_back(agent.process_id);
    throw;
  }
  if (!msg) return std::nullopt;
  if (msg->type == MsgType::kAbort) {
    dead_.push_back(agent.process_id);
    throw ProtocolError("agent " + std::to_string(agent.process_id) +
                        " aborted: " + msg->reason);
  }
  if (msg->type != type)
    throw ProtocolError(std::string("expected ") + to_string(type) + " from agent " +
                        std::to_string(agent.process_id) + ", got " + to_string(msg->type));
  return msg;
}

void Coordinator::abort_all(const std::string& reason) {
  Message abort;
  abort.type = MsgType::kAbort;
  abort.reason = reason;
  for (auto& a : agents_) {
    if (std::find(dead_.begin(), dead_.end(), a.process_id) != dead_.end()) continue;
    try {
      a.channel->send(abort);
    } catch (const Error&) {
      dead_.push_back(a.process_id);
    }
  }
  phase_ = CkptPhase::kAborted;
}

void Coordinator::drop_dead_agents() {
  if (dead_.empty()) return;
  agents_.erase(std::remove_if(agents_.begin(), agents_.end(),
                               [&](const AgentHandle& a) {
                                 return std::find(dead_.begin(), dead_.end(), a.process_id) !=
                                        dead_.end();
                               }),
                agents_.end());
  dead_.clear();
}

CheckpointReport Coordinator::run_checkpoint() {
  if (phase_ != CkptPhase::kIdle && phase_ != CkptPhase::kAborted)
    throw Busy("checkpoint already in flight");
  if (agents_.empty()) throw ProtocolError("no registered agents");

  CheckpointReport report;
  Clock& clock = store_.clock();
  const GenerationId gen = store_.next_id();
  std::optional<StagingHandle> staging;
  bool timed_out = false;

  try {
    phase_ = CkptPhase::kQuiesce;
    // An attempt consumes its index even if it aborts later.
    staging = store_.begin_generation(gen, static_cast<int>(agents_.size()));

    // Drop messages left over from a previously aborted round.
    for (auto& a : agents_) {
      try {
        while (a.channel->recv(std::chrono::milliseconds(0))) {
        }
      } catch (const Error&) {
        dead_.push_back(a.process_id);
        throw;
      }
    }

    Message request;
    request.type = MsgType::kCkptRequest;
    request.generation = gen.index;
    for (auto& a : agents_) {
      try {
        a.channel->send(request);
      } catch (const Error&) {
        dead_.push_back(a.process_id);
        throw;
      }
    }
    for (auto& a : agents_) {
      if (!expect(a, MsgType::kQuiesceAck)) {
        timed_out = true;
        throw ProtocolError("agent " + std::to_string(a.process_id) +
                            " missed the quiesce deadline");
      }
    }

    phase_ = CkptPhase::kWriting;
    if (opts_.precious_stager) {
      const double t0 = clock.now();
      auto records = opts_.precious_stager(*staging);
      for (const auto& r : records) report.precious_bytes += r.byte_size;
      report.precious_duration_s = clock.now() - t0;
    }

    phase_ = CkptPhase::kBarrier;
    const double barrier_t0 = clock.now();
    std::vector<int> missing;
    for (auto& a : agents_) {
      const double t0 = clock.now();
      auto staged = expect(a, MsgType::kImageStaged);
      if (!staged) {
        missing.push_back(a.process_id);
        continue;
      }
      report.per_process[a.process_id] = {staged->byte_count, clock.now() - t0};
    }
    if (!missing.empty()) {
      timed_out = true;
      std::string who;
      for (int pid : missing) who += (who.empty() ? "" : ", ") + std::to_string(pid);
      throw ProtocolError("barrier timeout, missing agents: " + who);
    }
    report.barrier_wait_s = clock.now() - barrier_t0;

    phase_ = CkptPhase::kCommitting;
    auto manifest = staging->commit();
    staging.reset();
    report.generation = manifest.generation;

    Message done;
    done.type = MsgType::kCommitDone;
    done.generation = manifest.generation.index;
    for (auto& a : agents_) a.channel->send(done);

    phase_ = CkptPhase::kPruning;
    report.pruned = store_.prune(opts_.keep_k);

    phase_ = CkptPhase::kResuming;
    Message resume;
    resume.type = MsgType::kResume;
    for (auto& a : agents_) a.channel->send(resume);

    phase_ = CkptPhase::kIdle;
    report.outcome = CheckpointReport::Outcome::kCommitted;
    return report;
  } catch (const Error& e) {
    report.outcome =
        timed_out ? CheckpointReport::Outcome::kTimedOut : CheckpointReport::Outcome::kAborted;
    report.abort_reason = e.what();
    report.generation.reset();
    if (staging) {
      try {
        staging->abort();
      } catch (const Error&) {
        // staging leftovers are swept by the next discard_staging
      }
    }
    abort_all(report.abort_reason);
    drop_dead_agents();
    return report;
  }
}

RestoreReport Coordinator::run_restore(std::optional<std::uint64_t> index) {
  if (phase_ != CkptPhase::kIdle && phase_ != CkptPhase::kAborted)
    throw Busy("restore refused during checkpoint");

  std::uint64_t idx;
  if (index) {
    idx = *index;
  } else {
    auto latest = store_.latest_committed();
    if (!latest) throw NotFound("store has no committed generation");
    idx = latest->index;
  }
  auto manifest = store_.load_manifest(idx);

  if (manifest.process_count != static_cast<int>(agents_.size()))
    throw RestoreRefused("manifest expects " + std::to_string(manifest.process_count) +
                         " processes, " + std::to_string(agents_.size()) + " registered");
  for (const auto& a : agents_) {
    bool found = false;
    for (const auto& img : manifest.images)
      if (img.process_id == a.process_id) found = true;
    if (!found)
      throw RestoreRefused("no image for registered process " + std::to_string(a.process_id));
  }

  RestoreReport report;
  report.generation = manifest.generation;
  if (opts_.precious_restorer) report.precious = opts_.precious_restorer(manifest);

  Message restore;
  restore.type = MsgType::kRestore;
  restore.generation = idx;
  for (auto& a : agents_) a.channel->send(restore);
  for (auto& a : agents_) {
    auto ack = expect(a, MsgType::kRestoreAck);
    if (!ack)
      throw ProtocolError("agent " + std::to_string(a.process_id) + " missed restore deadline");
    report.restored_pids.push_back(static_cast<int>(ack->process_id));
  }
  return report;
}

AgentRuntime::AgentRuntime(std::unique_ptr<Channel> channel, GenerationStore& store,
                           AgentCallbacks cbs)
    : channel_(std::move(channel)), store_(store), cbs_(std::move(cbs)) {}

void AgentRuntime::register_with_coordinator(std::chrono::milliseconds timeout) {
  Message reg;
  reg.type = MsgType::kRegister;
  channel_->send(reg);
  auto ack = channel_->recv(timeout);
  if (!ack) throw ProtocolError("timed out waiting for REGISTER_ACK");
  if (ack->type != MsgType::kRegisterAck)
    throw ProtocolError(std::string("expected REGISTER_ACK, got ") + to_string(ack->type));
  process_id_ = static_cast<int>(ack->process_id);
}

bool AgentRuntime::serve_one(std::chrono::milliseconds timeout) {
  auto msg = channel_->recv(timeout);
  if (!msg) return false;
  switch (msg->type) {
    case MsgType::kCkptRequest:
      handle_checkpoint(msg->generation);
      return true;
    case MsgType::kRestore:
      handle_restore(msg->generation);
      return true;
    case MsgType::kAbort:
      // stray abort outside a round: nothing is paused, nothing to do
      return true;
    default:
      throw ProtocolError(std::string("unexpected message ") + to_string(msg->type));
  }
}

void AgentRuntime::handle_checkpoint(std::uint64_t gen_index) {
  auto sections = cbs_.quiesce();

  Message ack;
  ack.type = MsgType::kQuiesceAck;
  ack.process_id = static_cast<std::uint64_t>(process_id_);
  channel_->send(ack);

  try {
    auto staging = store_.attach_staging(gen_index);
    auto image = snapshot_state(sections);
    SpanSource source(image);
    auto record = staging.stage_image(process_id_, source);

    Message staged;
    staged.type = MsgType::kImageStaged;
    staged.process_id = static_cast<std::uint64_t>(process_id_);
    staged.byte_count = record.byte_size;
    staged.digest = record.checksum;
    channel_->send(staged);
  } catch (const Error& e) {
    // The round died underneath us (e.g. the coordinator aborted staging).
    // Tell the coordinator, resume the application, and stay alive.
    Message abort;
    abort.type = MsgType::kAbort;
    abort.reason = std::string("agent ") + std::to_string(process_id_) + ": " + e.what();
    try {
      channel_->send(abort);
    } catch (const Error&) {
    }
    cbs_.resume();
    return;
  }

  // Hold quiesced until the coordinator resolves the round.
  const auto round_timeout = std::chrono::milliseconds(30000);
  for (;;) {
    auto msg = channel_->recv(round_timeout);
    if (!msg) throw ProtocolError("coordinator went silent after staging");
    if (msg->type == MsgType::kCommitDone) continue;
    if (msg->type == MsgType::kResume || msg->type == MsgType::kAbort) {
      cbs_.resume();
      return;
    }
    throw ProtocolError(std::string("unexpected message while quiesced: ") +
                        to_string(msg->type));
  }
}

void AgentRuntime::handle_restore(std::uint64_t gen_index) {
  auto manifest = store_.load_manifest(gen_index);
  auto image = store_.read_image(manifest, process_id_);
  cbs_.apply_restore(restore_state(image));

  Message ack;
  ack.type = MsgType::kRestoreAck;
  ack.process_id = static_cast<std::uint64_t>(process_id_);
  channel_->send(ack);
}

}  // namespace genckpt
