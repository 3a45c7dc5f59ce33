#include "kotrie/reclaim.hpp"

#include <stdexcept>

namespace kotrie {

EpochReclaimer::EpochReclaimer(std::size_t processes)
    : n_{processes},
      shadow_{debug::poison_enabled()},
      announce_{std::make_unique<Announce[]>(processes)},
      local_{std::make_unique<Local[]>(processes)},
      shadow_ok_(processes, 1) {
  if (processes == 0) throw std::invalid_argument("reclaimer needs >= 1 process");
}

EpochReclaimer::~EpochReclaimer() { drain_all(); }

void EpochReclaimer::announce(ProcessId pid, std::uint64_t e, bool quiescent) {
  if (!shadow_) {
    announce_[pid].word.store(pack(e, quiescent), std::memory_order_seq_cst);
    return;
  }
  std::lock_guard lock{shadow_mu_};
  announce_[pid].word.store(pack(e, quiescent), std::memory_order_seq_cst);
  if (quiescent || e == epoch_.load(std::memory_order_seq_cst)) shadow_ok_[pid] = 1;
}

bool EpochReclaimer::try_increment(std::uint64_t e) {
  debug::sched_point(debug::Site::kEpochCas);
  if (!shadow_)
    return epoch_.compare_exchange_strong(e, e + 1, std::memory_order_seq_cst);
  std::lock_guard lock{shadow_mu_};
  const std::uint64_t from = e;
  if (!epoch_.compare_exchange_strong(e, e + 1, std::memory_order_seq_cst))
    return false;
  auto &c = debug::counters();
  c.shadow_increments.fetch_add(1, std::memory_order_relaxed);
  for (std::size_t p = 0; p < n_; ++p) {
    if (!shadow_ok_[p]) c.shadow_violations.fetch_add(1, std::memory_order_relaxed);
    const std::uint64_t w = announce_[p].word.load(std::memory_order_seq_cst);
    shadow_ok_[p] = ((w & 1) != 0 || (w >> 1) == from + 1) ? 1 : 0;
  }
  return true;
}

void EpochReclaimer::start_op(ProcessId pid) {
  Local &local = local_[pid];
  const std::uint64_t e = epoch_.load(std::memory_order_seq_cst);
  if (e != local.e) {
    rotate_and_reclaim(pid);
    local.c = 1;
    local.e = e;
  }
  if (local.c < n_) {
    const std::uint64_t other =
        announce_[(pid + local.c) % n_].word.load(std::memory_order_seq_cst);
    if ((other & 1) != 0 || (other >> 1) == e) ++local.c;
  }
  if (local.c >= n_) try_increment(e);
  announce(pid, e, false);
}

void EpochReclaimer::end_op(ProcessId pid) { announce(pid, local_[pid].e, true); }

void EpochReclaimer::reclaim_later(ProcessId pid, Retirable *r, const RecordKind &kind) {
  if (r->bagged.exchange(true, std::memory_order_relaxed)) {
    debug::counters().double_bagging.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  Local &local = local_[pid];
  local.bags[local.bag].push_back(
      Entry{r, &kind, epoch_.load(std::memory_order_relaxed)});
}

void EpochReclaimer::dispose(Local &local, const Entry &entry) {
  if (!shadow_) {
    entry.kind->destroy(entry.record);
    return;
  }
  if (entry.record->canary.load(std::memory_order_relaxed) != kLiveCanary)
    debug::counters().poison_reads.fetch_add(1, std::memory_order_relaxed);
  entry.kind->poison(entry.record);
  local.quarantine.push_back(entry);
  if (local.quarantine.size() > kQuarantine) {
    local.quarantine.front().kind->destroy(local.quarantine.front().record);
    local.quarantine.pop_front();
  }
}

void EpochReclaimer::rotate_and_reclaim(ProcessId pid) {
  Local &local = local_[pid];
  local.bag = (local.bag + 1) % kBags;
  auto &bag = local.bags[local.bag];
  if (bag.empty()) return;
  const std::uint64_t now = epoch_.load(std::memory_order_seq_cst);
  auto &c = debug::counters();
  for (const Entry &entry : bag) {
    if (shadow_) {
      c.drained.fetch_add(1, std::memory_order_relaxed);
      if (now - entry.bagged_epoch < kBags - 1)
        c.early_drains.fetch_add(1, std::memory_order_relaxed);
    }
    dispose(local, entry);
  }
  bag.clear();
}

void EpochReclaimer::free_quarantine(Local &local) {
  for (const Entry &entry : local.quarantine) entry.kind->destroy(entry.record);
  local.quarantine.clear();
}

void EpochReclaimer::drain(ProcessId pid) {
  Local &local = local_[pid];
  for (auto &bag : local.bags) {
    for (const Entry &entry : bag) dispose(local, entry);
    bag.clear();
  }
  free_quarantine(local);
}

void EpochReclaimer::drain_all() {
  for (std::size_t p = 0; p < n_; ++p) drain(static_cast<ProcessId>(p));
}

std::size_t EpochReclaimer::pending(ProcessId pid) const {
  std::size_t total = 0;
  for (const auto &bag : local_[pid].bags) total += bag.size();
  return total;
}

std::size_t EpochReclaimer::pending_total() const {
  std::size_t total = 0;
  for (std::size_t p = 0; p < n_; ++p) total += pending(static_cast<ProcessId>(p));
  return total;
}

std::pair<std::uint64_t, bool> EpochReclaimer::announcement(ProcessId pid) const {
  const std::uint64_t w = announce_[pid].word.load(std::memory_order_seq_cst);
  return {w >> 1, (w & 1) != 0};
}

}  // namespace kotrie
