#include "tucker/comm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace tucker {

namespace {

std::string group_key(const Group& group) {
  std::string key;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (i > 0) key.push_back(',');
    key += std::to_string(group[i]);
  }
  return key;
}

int position_in(const Group& group, int rank) {
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] == rank) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

Group all_ranks(int world_size) {
  Group g(static_cast<std::size_t>(world_size));
  for (int r = 0; r < world_size; ++r) g[static_cast<std::size_t>(r)] = r;
  return g;
}

struct VirtualComm::Rendezvous {
  std::uint64_t seq = 0;
  int arrived = 0;
  int picked = 0;
  bool complete = false;
  bool failed = false;
  std::string fail_message;
  OpKind kind = OpKind::send_recv;
  Group members;
  std::int64_t meta_a = 0;
  std::int64_t meta_b = 0;
  std::int64_t expected_length = -1;  // reduce-type ops only
  std::vector<std::int64_t> partition;
  std::vector<Deposit> deposits;
  std::vector<bool> deposited;
  std::vector<std::vector<double>> results;

  void reset_for_next(std::size_t member_count) {
    ++seq;
    arrived = 0;
    picked = 0;
    complete = false;
    expected_length = -1;
    partition.clear();
    deposits.assign(member_count, Deposit{});
    deposited.assign(member_count, false);
    results.assign(member_count, {});
  }

  void fail(std::condition_variable& cv, const std::string& msg) {
    if (!failed) {
      failed = true;
      fail_message = msg;
    }
    cv.notify_all();
  }
};

struct VirtualComm::State {
  std::mutex mu;
  std::condition_variable cv;
  std::mutex run_token;
  std::map<std::string, Rendezvous> slots;
  std::vector<bool> done;
  std::vector<std::exception_ptr> errors;
  // Predicate of the wait each rank is parked in; empty while running.
  std::vector<std::function<bool()>> waiting_pred;
  int done_count = 0;

  // A rank can make progress if it is running, or waiting on a condition
  // that already holds. When nobody can, every parked collective is failed
  // so the waiters surface a protocol error instead of hanging.
  void fail_everything_if_stuck() {
    for (std::size_t r = 0; r < done.size(); ++r) {
      if (done[r]) continue;
      if (!waiting_pred[r]) return;
      if (waiting_pred[r]()) return;
    }
    for (auto& [key, slot] : slots) {
      (void)key;
      if (!slot.failed && (slot.arrived > 0 || slot.complete)) {
        slot.fail(cv, "collective cannot complete: all ranks blocked or finished");
      }
    }
  }
};

VirtualComm::VirtualComm(int world_size, CommBackend backend)
    : world_size_(world_size),
      backend_(backend),
      state_(std::make_unique<State>()),
      ledgers_(static_cast<std::size_t>(world_size)) {
  if (world_size < 1) throw DimensionError("world size must be positive");
}

VirtualComm::~VirtualComm() = default;

CostLedger& VirtualComm::ledger(int rank) { return ledgers_.at(static_cast<std::size_t>(rank)); }
const CostLedger& VirtualComm::ledger(int rank) const {
  return ledgers_.at(static_cast<std::size_t>(rank));
}

void VirtualComm::reset_ledgers() {
  for (CostLedger& l : ledgers_) l.reset();
}

int RankContext::world_size() const { return comm_->world_size(); }

CostLedger& RankContext::ledger() { return comm_->ledger(rank_); }

void VirtualComm::run(const std::function<void(RankContext&)>& body) {
  state_->slots.clear();
  state_->done.assign(static_cast<std::size_t>(world_size_), false);
  state_->errors.assign(static_cast<std::size_t>(world_size_), nullptr);
  state_->waiting_pred.assign(static_cast<std::size_t>(world_size_), {});
  state_->done_count = 0;

  auto worker = [this, &body](int rank) {
    if (backend_ == CommBackend::serial) state_->run_token.lock();
    RankContext ctx(*this, rank);
    std::exception_ptr err;
    try {
      body(ctx);
    } catch (...) {
      err = std::current_exception();
    }
    {
      std::unique_lock<std::mutex> lk(state_->mu);
      state_->done[static_cast<std::size_t>(rank)] = true;
      state_->errors[static_cast<std::size_t>(rank)] = err;
      ++state_->done_count;
      // A finished rank can never join an in-flight collective; fail the
      // groups still waiting for it.
      for (auto& [key, slot] : state_->slots) {
        (void)key;
        if (slot.complete || slot.failed || slot.arrived == 0) continue;
        const int pos = position_in(slot.members, rank);
        if (pos >= 0 && !slot.deposited[static_cast<std::size_t>(pos)]) {
          slot.fail(state_->cv,
                    "collective cannot complete: rank " + std::to_string(rank) +
                        " finished without joining");
        }
      }
      state_->fail_everything_if_stuck();
      state_->cv.notify_all();
    }
    if (backend_ == CommBackend::serial) state_->run_token.unlock();
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(world_size_));
  for (int r = 0; r < world_size_; ++r) threads.emplace_back(worker, r);
  for (std::thread& t : threads) t.join();

  for (int r = 0; r < world_size_; ++r) {
    if (state_->errors[static_cast<std::size_t>(r)]) {
      std::rethrow_exception(state_->errors[static_cast<std::size_t>(r)]);
    }
  }
}

void VirtualComm::charge(CostLedger& ledger, OpKind kind, int member_count, double local_words,
                         bool endpoint) {
  const double p = static_cast<double>(member_count);
  const double fraction = p > 1.0 ? (p - 1.0) / p : 0.0;
  switch (kind) {
    case OpKind::send_recv:
      if (endpoint) {
        ledger.charge_messages(1.0);
        ledger.charge_words(local_words);
      }
      break;
    case OpKind::all_reduce:
    case OpKind::reduce:
      ledger.charge_messages(2.0 * std::log2(p));
      ledger.charge_words(2.0 * fraction * local_words);
      ledger.charge_reduction_flops(fraction * local_words);
      break;
    case OpKind::reduce_scatter:
      ledger.charge_messages(std::log2(p));
      ledger.charge_words(fraction * local_words);
      ledger.charge_reduction_flops(fraction * local_words);
      break;
    case OpKind::all_to_all:
      ledger.charge_messages(p - 1.0);
      ledger.charge_words(fraction * local_words);
      break;
  }
}

void VirtualComm::compute_results(Rendezvous& slot, OpKind kind, const Group& group) {
  const std::size_t members = group.size();
  slot.results.assign(members, {});

  switch (kind) {
    case OpKind::send_recv: {
      const int from_pos = position_in(group, static_cast<int>(slot.meta_a));
      const int to_pos = position_in(group, static_cast<int>(slot.meta_b));
      const Deposit& src = slot.deposits[static_cast<std::size_t>(from_pos)];
      if (src.length > 0) {
        slot.results[static_cast<std::size_t>(to_pos)].assign(src.data, src.data + src.length);
      }
      break;
    }
    case OpKind::all_reduce:
    case OpKind::reduce: {
      const std::int64_t len = slot.expected_length;
      std::vector<double> sum(static_cast<std::size_t>(len), 0.0);
      for (std::size_t m = 0; m < members; ++m) {
        const Deposit& d = slot.deposits[m];
        for (std::int64_t i = 0; i < len; ++i) sum[static_cast<std::size_t>(i)] += d.data[i];
      }
      if (kind == OpKind::all_reduce) {
        for (std::size_t m = 0; m < members; ++m) slot.results[m] = sum;
      } else {
        const int root_pos = position_in(group, static_cast<int>(slot.meta_a));
        slot.results[static_cast<std::size_t>(root_pos)] = std::move(sum);
      }
      break;
    }
    case OpKind::reduce_scatter: {
      const std::int64_t len = slot.expected_length;
      std::vector<double> sum(static_cast<std::size_t>(len), 0.0);
      for (std::size_t m = 0; m < members; ++m) {
        const Deposit& d = slot.deposits[m];
        for (std::int64_t i = 0; i < len; ++i) sum[static_cast<std::size_t>(i)] += d.data[i];
      }
      std::int64_t offset = 0;
      for (std::size_t m = 0; m < members; ++m) {
        const std::int64_t seg = slot.partition[m];
        slot.results[m].assign(sum.begin() + offset, sum.begin() + offset + seg);
        offset += seg;
      }
      break;
    }
    case OpKind::all_to_all: {
      // Cross-check the size matrix: what i sends to j must equal what j
      // expects from i.
      for (std::size_t i = 0; i < members; ++i) {
        for (std::size_t j = 0; j < members; ++j) {
          const std::int64_t sent = slot.deposits[i].send_lengths[j];
          const std::int64_t expected = slot.deposits[j].expected_recv_lengths[i];
          if (sent != expected) {
            throw ProtocolError("all-to-all size matrix mismatch: rank " +
                                std::to_string(group[i]) + " sends " + std::to_string(sent) +
                                " words to rank " + std::to_string(group[j]) + " which expects " +
                                std::to_string(expected));
          }
        }
      }
      for (std::size_t j = 0; j < members; ++j) {
        std::vector<double>& out = slot.results[j];
        for (std::size_t i = 0; i < members; ++i) {
          const Deposit& d = slot.deposits[i];
          std::int64_t offset = 0;
          for (std::size_t b = 0; b < j; ++b) offset += d.send_lengths[b];
          if (d.send_lengths[j] > 0) {
            out.insert(out.end(), d.data + offset, d.data + offset + d.send_lengths[j]);
          }
        }
      }
      break;
    }
  }
}

std::vector<double> VirtualComm::collective(RankContext& ctx, OpKind kind, const Group& group,
                                            std::span<const double> payload, std::int64_t meta_a,
                                            std::int64_t meta_b,
                                            std::span<const std::int64_t> partition,
                                            std::span<const std::int64_t> expected) {
  if (group.empty()) throw ProtocolError("collective group is empty");
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] < 0 || group[i] >= world_size_) {
      throw ProtocolError("group member " + std::to_string(group[i]) + " out of range");
    }
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      if (group[i] == group[j]) {
        throw ProtocolError("group member " + std::to_string(group[i]) + " repeated");
      }
    }
  }
  const int my_pos = position_in(group, ctx.rank());
  if (my_pos < 0) {
    throw ProtocolError("rank " + std::to_string(ctx.rank()) + " is not in the group it invoked");
  }
  const bool reduce_type =
      kind == OpKind::all_reduce || kind == OpKind::reduce || kind == OpKind::reduce_scatter;

  const std::string key = group_key(group);
  const bool serial = backend_ == CommBackend::serial;
  State& st = *state_;

  // Waits with the state lock held; in the serial backend the run token is
  // handed over while sleeping so exactly one rank makes progress at a time.
  const int me = ctx.rank();
  auto wait_until = [&](std::unique_lock<std::mutex>& lk, auto pred) {
    if (pred()) return;
    st.waiting_pred[static_cast<std::size_t>(me)] = pred;
    st.fail_everything_if_stuck();
    while (!pred()) {
      if (serial) {
        st.run_token.unlock();
        st.cv.wait(lk);
        lk.unlock();
        st.run_token.lock();
        lk.lock();
      } else {
        st.cv.wait(lk);
      }
    }
    st.waiting_pred[static_cast<std::size_t>(me)] = {};
  };

  std::unique_lock<std::mutex> lk(st.mu);

  for (int member : group) {
    if (st.done[static_cast<std::size_t>(member)]) {
      throw ProtocolError("rank " + std::to_string(member) +
                          " already finished and cannot join a collective");
    }
  }

  Rendezvous& slot = st.slots[key];
  if (slot.members.empty()) {
    slot.members = group;
    slot.deposits.assign(group.size(), Deposit{});
    slot.deposited.assign(group.size(), false);
    slot.results.assign(group.size(), {});
  }

  // Wait out the pickup phase of the previous collective on this group.
  wait_until(lk, [&] { return !slot.complete || slot.failed; });
  if (slot.failed) throw ProtocolError(slot.fail_message);

  const std::uint64_t my_seq = ctx.group_sequence_[key]++;
  if (my_seq != slot.seq) {
    slot.fail(st.cv,
              "collective step mismatch on group " + key + ": rank " + std::to_string(ctx.rank()) +
                  " is at step " + std::to_string(my_seq) + " but the group is at step " +
                  std::to_string(slot.seq));
    throw ProtocolError(slot.fail_message);
  }

  if (slot.arrived == 0) {
    slot.kind = kind;
    slot.meta_a = meta_a;
    slot.meta_b = meta_b;
    if (reduce_type) slot.expected_length = static_cast<std::int64_t>(payload.size());
    if (kind == OpKind::reduce_scatter) slot.partition.assign(partition.begin(), partition.end());
  } else {
    bool matches = slot.kind == kind && slot.meta_a == meta_a && slot.meta_b == meta_b;
    if (matches && reduce_type &&
        slot.expected_length != static_cast<std::int64_t>(payload.size())) {
      slot.fail(st.cv,
                "payload length mismatch on group " + key + ": " + std::to_string(payload.size()) +
                    " vs " + std::to_string(slot.expected_length));
      throw ProtocolError(slot.fail_message);
    }
    if (matches && kind == OpKind::reduce_scatter) {
      matches = std::equal(partition.begin(), partition.end(), slot.partition.begin(),
                           slot.partition.end());
    }
    if (!matches) {
      slot.fail(st.cv, "mismatched collective invocation on group " + key);
      throw ProtocolError(slot.fail_message);
    }
  }

  Deposit& mine = slot.deposits[static_cast<std::size_t>(my_pos)];
  mine.data = payload.data();
  mine.length = static_cast<std::int64_t>(payload.size());
  if (kind == OpKind::all_to_all) {
    mine.send_lengths.assign(partition.begin(), partition.end());
    mine.expected_recv_lengths.assign(expected.begin(), expected.end());
  }
  slot.deposited[static_cast<std::size_t>(my_pos)] = true;
  ++slot.arrived;

  if (slot.arrived == static_cast<int>(group.size())) {
    try {
      compute_results(slot, kind, group);
      slot.complete = true;
    } catch (const ProtocolError& e) {
      slot.fail(st.cv, e.what());
    }
    st.cv.notify_all();
  } else {
    wait_until(lk, [&] { return slot.complete || slot.failed; });
  }
  if (slot.failed) throw ProtocolError(slot.fail_message);

  std::vector<double> result = std::move(slot.results[static_cast<std::size_t>(my_pos)]);
  ++slot.picked;
  if (slot.picked == static_cast<int>(group.size())) {
    slot.reset_for_next(group.size());
    st.cv.notify_all();
  }

  // Model cost, charged per participating rank. The deposit may already be
  // recycled for the next collective, so use the captured payload size.
  const double payload_words = static_cast<double>(payload.size());
  double local_words = payload_words;
  bool endpoint = false;
  if (kind == OpKind::send_recv) {
    endpoint = (ctx.rank() == static_cast<int>(meta_a) || ctx.rank() == static_cast<int>(meta_b)) &&
               meta_a != meta_b;
    local_words = ctx.rank() == static_cast<int>(meta_a) ? payload_words
                                                         : static_cast<double>(result.size());
  }
  charge(ledgers_[static_cast<std::size_t>(ctx.rank())], kind, static_cast<int>(group.size()),
         local_words, endpoint);
  return result;
}

std::vector<double> RankContext::send_recv(const Group& group, int from, int to,
                                           std::span<const double> payload) {
  if (position_in(group, from) < 0 || position_in(group, to) < 0) {
    throw ProtocolError("send_recv endpoints " + std::to_string(from) + "->" + std::to_string(to) +
                        " must both be group members");
  }
  return comm_->collective(*this, VirtualComm::OpKind::send_recv, group,
                           rank_ == from ? payload : std::span<const double>{}, from, to, {}, {});
}

std::vector<double> RankContext::all_reduce_sum(const Group& group,
                                                std::span<const double> values) {
  return comm_->collective(*this, VirtualComm::OpKind::all_reduce, group, values, 0, 0, {}, {});
}

std::vector<double> RankContext::reduce_sum(const Group& group, std::span<const double> values,
                                            int root) {
  if (position_in(group, root) < 0) {
    throw ProtocolError("reduce root " + std::to_string(root) + " is not in the group");
  }
  return comm_->collective(*this, VirtualComm::OpKind::reduce, group, values, root, 0, {}, {});
}

std::vector<double> RankContext::reduce_scatter_sum(const Group& group,
                                                    std::span<const double> values,
                                                    std::span<const std::int64_t> partition) {
  if (partition.size() != group.size()) {
    throw ProtocolError("reduce-scatter partition has " + std::to_string(partition.size()) +
                        " segments for a group of " + std::to_string(group.size()));
  }
  std::int64_t total = 0;
  for (std::int64_t seg : partition) {
    if (seg < 0) throw ProtocolError("reduce-scatter segment length is negative");
    total += seg;
  }
  if (total != static_cast<std::int64_t>(values.size())) {
    throw ProtocolError("reduce-scatter partition covers " + std::to_string(total) +
                        " words but the array has " + std::to_string(values.size()));
  }
  return comm_->collective(*this, VirtualComm::OpKind::reduce_scatter, group, values, 0, 0,
                           partition, {});
}

std::vector<double> RankContext::all_to_all(const Group& group, std::span<const double> send,
                                            std::span<const std::int64_t> send_lengths,
                                            std::span<const std::int64_t> expected_recv_lengths) {
  if (send_lengths.size() != group.size() || expected_recv_lengths.size() != group.size()) {
    throw ProtocolError("all-to-all needs one send and one expected length per group member");
  }
  std::int64_t total = 0;
  for (std::int64_t seg : send_lengths) {
    if (seg < 0) throw ProtocolError("all-to-all segment length is negative");
    total += seg;
  }
  if (total != static_cast<std::int64_t>(send.size())) {
    throw ProtocolError("all-to-all segments cover " + std::to_string(total) +
                        " words but the buffer has " + std::to_string(send.size()));
  }
  return comm_->collective(*this, VirtualComm::OpKind::all_to_all, group, send, 0, 0, send_lengths,
                           expected_recv_lengths);
}

std::string VirtualComm::ledger_report() const {
  std::ostringstream out;
  out << "cost ledger (" << (backend_ == CommBackend::serial ? "serial" : "threaded")
      << " backend, " << world_size_ << " ranks)\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %12s %14s %16s %16s %16s\n", "rank", "messages", "words",
                "flops", "reduction_flops", "peak_temp_words");
  out << line;
  for (int r = 0; r < world_size_; ++r) {
    const CostLedger& l = ledgers_[static_cast<std::size_t>(r)];
    std::snprintf(line, sizeof(line), "%-6d %12.6g %14.6g %16.6g %16.6g %16.6g\n", r, l.messages(),
                  l.words(), l.flops(), l.reduction_flops(), l.peak_temp_words());
    out << line;
  }
  auto fold = [&](auto getter) {
    double m = 0.0;
    for (const CostLedger& l : ledgers_) m = std::max(m, getter(l));
    return m;
  };
  std::snprintf(line, sizeof(line), "%-6s %12.6g %14.6g %16.6g %16.6g %16.6g\n", "max",
                fold([](const CostLedger& l) { return l.messages(); }),
                fold([](const CostLedger& l) { return l.words(); }),
                fold([](const CostLedger& l) { return l.flops(); }),
                fold([](const CostLedger& l) { return l.reduction_flops(); }),
                fold([](const CostLedger& l) { return l.peak_temp_words(); }));
  out << line;
  return out.str();
}

}  // namespace tucker
