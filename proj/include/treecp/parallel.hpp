#pragma once

// Replication harness. Workers pull replication indices from an atomic
// counter and write each result into its own slot, so the output vector is
// a pure function of the per-replication seeds: thread count and scheduling
// never change what a run produces, only how fast it appears.

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace treecp {

inline unsigned threadCountFromEnv(unsigned requested = 0) {
  if (requested >= 1) return requested;
  if (const char* env = std::getenv("TREECP_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw >= 1 ? hw : 1;
}

// Runs body(rep) for rep in [0, reps); body must be safe to call from
// several threads at once (each call should derive its own seeds from rep).
template <typename R, typename Body>
std::vector<R> replicate(std::uint64_t reps, unsigned threads, Body&& body) {
  std::vector<std::optional<R>> slots(reps);
  if (threads <= 1 || reps <= 1) {
    for (std::uint64_t rep = 0; rep < reps; ++rep) slots[rep].emplace(body(rep));
  } else {
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex errorLock;
    auto worker = [&] {
      while (!failed.load(std::memory_order_relaxed)) {
        std::uint64_t rep = next.fetch_add(1, std::memory_order_relaxed);
        if (rep >= reps) return;
        try {
          slots[rep].emplace(body(rep));
        } catch (...) {
          std::lock_guard<std::mutex> hold(errorLock);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    unsigned n = threads;
    if (static_cast<std::uint64_t>(n) > reps) n = static_cast<unsigned>(reps);
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  std::vector<R> out;
  out.reserve(reps);
  for (std::optional<R>& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace treecp
