#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tucker/errors.hpp"

namespace tucker {

/// Flops / words / messages / peak temporary memory, additive under
/// sequential composition.
struct CostEstimate {
  double messages = 0.0;
  double words = 0.0;
  double flops = 0.0;
  double peak_temp_words = 0.0;
};

/// Per-rank accumulator of modeled costs. Message and word charges follow
/// the collective cost formulas; reduction flops are tracked separately from
/// compute flops so reports can ignore them.
class CostLedger {
 public:
  void charge_messages(double m) { messages_ += m; }
  void charge_words(double w) { words_ += w; }
  void charge_flops(double f) { flops_ += f; }
  void charge_reduction_flops(double f) { reduction_flops_ += f; }

  void temp_alloc(double words) {
    temp_now_ += words;
    if (temp_now_ > temp_peak_) temp_peak_ = temp_now_;
  }
  void temp_free(double words) { temp_now_ -= words; }

  double messages() const { return messages_; }
  double words() const { return words_; }
  double flops() const { return flops_; }
  double reduction_flops() const { return reduction_flops_; }
  double peak_temp_words() const { return temp_peak_; }

  CostEstimate snapshot() const { return {messages_, words_, flops_, temp_peak_}; }

  void reset() { *this = CostLedger(); }

 private:
  double messages_ = 0.0;
  double words_ = 0.0;
  double flops_ = 0.0;
  double reduction_flops_ = 0.0;
  double temp_now_ = 0.0;
  double temp_peak_ = 0.0;
};

/// Scope guard pairing temp_alloc with temp_free.
class TempGuard {
 public:
  TempGuard(CostLedger& ledger, double words) : ledger_(&ledger), words_(words) {
    ledger_->temp_alloc(words_);
  }
  TempGuard(const TempGuard&) = delete;
  TempGuard& operator=(const TempGuard&) = delete;
  ~TempGuard() { ledger_->temp_free(words_); }

 private:
  CostLedger* ledger_;
  double words_;
};

using Group = std::vector<int>;

Group all_ranks(int world_size);

enum class CommBackend { serial, threaded };

class VirtualComm;

/// Per-rank handle passed to the SPMD body. All collectives must be invoked
/// by every member of their group; results are computed once from staged
/// buffers in group order, so they are bitwise identical across backends.
class RankContext {
 public:
  int rank() const { return rank_; }
  int world_size() const;
  CostLedger& ledger();

  /// Destination receives the payload bytes exactly; other members receive
  /// an empty vector. A self-send is the identity and costs nothing.
  std::vector<double> send_recv(const Group& group, int from, int to,
                                std::span<const double> payload);

  /// Element-wise sum over the group in group order, same on every member.
  std::vector<double> all_reduce_sum(const Group& group, std::span<const double> values);

  /// As all_reduce_sum but only `root` receives the sum; others get empty.
  std::vector<double> reduce_sum(const Group& group, std::span<const double> values, int root);

  /// Sums, then member k keeps contiguous segment k of the partition.
  std::vector<double> reduce_scatter_sum(const Group& group, std::span<const double> values,
                                         std::span<const std::int64_t> partition);

  /// Member k receives [segment k of member 0, ..., segment k of member P-1]
  /// concatenated in group order. Segment lengths may vary; each member
  /// declares what it sends and what it expects, and the two are
  /// cross-checked.
  std::vector<double> all_to_all(const Group& group, std::span<const double> send,
                                 std::span<const std::int64_t> send_lengths,
                                 std::span<const std::int64_t> expected_recv_lengths);

 private:
  friend class VirtualComm;
  RankContext(VirtualComm& comm, int rank) : comm_(&comm), rank_(rank) {}
  VirtualComm* comm_;
  int rank_;
  std::map<std::string, std::uint64_t> group_sequence_;
};

/// In-process stand-in for a message-passing world.
///
/// Every rank runs the SPMD body on its own thread. The serial backend
/// admits one runnable rank at a time (the reference semantics); the
/// threaded backend lets ranks run concurrently. Collective results are
/// staged and reduced in fixed group order either way, so numeric output is
/// bitwise identical across backends. Misuse fails fast with ProtocolError
/// instead of deadlocking.
class VirtualComm {
 public:
  explicit VirtualComm(int world_size, CommBackend backend = CommBackend::serial);
  ~VirtualComm();

  VirtualComm(const VirtualComm&) = delete;
  VirtualComm& operator=(const VirtualComm&) = delete;

  int world_size() const { return world_size_; }
  CommBackend backend() const { return backend_; }

  /// Runs the body once per rank and joins. Rethrows the lowest-rank failure.
  void run(const std::function<void(RankContext&)>& body);

  CostLedger& ledger(int rank);
  const CostLedger& ledger(int rank) const;
  void reset_ledgers();

  /// Structured text report: one row per rank plus a max-over-ranks row.
  std::string ledger_report() const;

 private:
  friend class RankContext;
  struct Rendezvous;
  struct State;

  enum class OpKind { send_recv, all_reduce, reduce, reduce_scatter, all_to_all };

  struct Deposit {
    const double* data = nullptr;
    std::int64_t length = 0;
    std::vector<std::int64_t> send_lengths;
    std::vector<std::int64_t> expected_recv_lengths;
  };

  std::vector<double> collective(RankContext& ctx, OpKind kind, const Group& group,
                                 std::span<const double> payload, std::int64_t meta_a,
                                 std::int64_t meta_b, std::span<const std::int64_t> partition,
                                 std::span<const std::int64_t> expected);

  void compute_results(Rendezvous& slot, OpKind kind, const Group& group);
  void charge(CostLedger& ledger, OpKind kind, int member_count, double local_words, bool endpoint);

  int world_size_;
  CommBackend backend_;
  std::unique_ptr<State> state_;
  std::vector<CostLedger> ledgers_;
};

}  // namespace tucker
