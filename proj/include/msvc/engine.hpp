#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "msvc/errors.hpp"
#include "msvc/table.hpp"
#include "msvc/value.hpp"

namespace msvc {

struct AsyncConfig {
  int async_factor = 1;  // A: max in-flight ops per worker
  int request_timeout_ms = 30000;
  int worker_threads = 1;

  void validate() const {
    if (async_factor < 1 || async_factor > 1024)
      raise(ErrorKind::invalid_config, "async_factor must be in [1, 1024]");
    if (request_timeout_ms <= 0) raise(ErrorKind::invalid_config, "request_timeout must be > 0");
    if (worker_threads < 1) raise(ErrorKind::invalid_config, "worker_threads must be >= 1");
  }
};

struct RowFailure {
  ErrorKind kind = ErrorKind::service_error;
  std::string message;
  int attempts = 1;
};

using RowResult = std::variant<Value, RowFailure>;

struct RowOutcome {
  std::size_t index = 0;
  RowResult result;
};

/// Failure rendered as plain data so it can live in an ordinary column.
inline Value failure_value(const RowFailure& f) {
  Value::Map m;
  m.emplace("error", Value::text(std::string(kind_name(f.kind))));
  m.emplace("message", Value::text(f.message));
  m.emplace("attempts", Value::integer(f.attempts));
  return Value::map(std::move(m));
}

inline bool is_failure_value(const Value& v) {
  if (v.kind() != ValueKind::map) return false;
  const Value* e = v.find("error");
  return e != nullptr && e->kind() == ValueKind::text;
}

// ---------------------------------------------------------------------------
// Job metrics

struct MetricsSnapshot {
  std::uint64_t rows = 0;
  double wall_ms = 0.0;
  std::map<int, std::uint64_t> status_counts;
  std::uint64_t retries = 0;
  std::uint64_t failures = 0;
  std::uint64_t transport_errors = 0;
  int max_in_flight = 0;
  std::vector<double> latencies_ms;
};

/// Shared by all workers of a job; every member update is thread-safe.
class JobMetrics {
 public:
  void op_started() {
    int cur = in_flight_.fetch_add(1, std::memory_order_acq_rel) + 1;
    int prev = max_in_flight_.load(std::memory_order_acquire);
    while (cur > prev &&
           !max_in_flight_.compare_exchange_weak(prev, cur, std::memory_order_acq_rel)) {
    }
  }
  void op_finished() { in_flight_.fetch_sub(1, std::memory_order_acq_rel); }

  void record_status(int status) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++status_counts_[status];
  }
  void record_retry() { retries_.fetch_add(1, std::memory_order_relaxed); }
  void record_failure() { failures_.fetch_add(1, std::memory_order_relaxed); }
  void record_transport_error() { transport_errors_.fetch_add(1, std::memory_order_relaxed); }
  void record_latency(double ms) {
    std::lock_guard<std::mutex> lock(mutex_);
    latencies_.push_back(ms);
  }
  void record_job(std::uint64_t rows, double wall_ms) {
    std::lock_guard<std::mutex> lock(mutex_);
    rows_ += rows;
    wall_ms_ += wall_ms;
  }

  int max_in_flight() const { return max_in_flight_.load(std::memory_order_acquire); }

  MetricsSnapshot snapshot() const {
    MetricsSnapshot s;
    s.retries = retries_.load(std::memory_order_relaxed);
    s.failures = failures_.load(std::memory_order_relaxed);
    s.transport_errors = transport_errors_.load(std::memory_order_relaxed);
    s.max_in_flight = max_in_flight_.load(std::memory_order_acquire);
    std::lock_guard<std::mutex> lock(mutex_);
    s.rows = rows_;
    s.wall_ms = wall_ms_;
    s.status_counts = status_counts_;
    s.latencies_ms = latencies_;
    return s;
  }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<std::uint64_t> retries_{0};
  std::atomic<std::uint64_t> failures_{0};
  std::atomic<std::uint64_t> transport_errors_{0};
  mutable std::mutex mutex_;
  std::map<int, std::uint64_t> status_counts_;
  std::vector<double> latencies_;
  std::uint64_t rows_ = 0;
  double wall_ms_ = 0.0;
};

// ---------------------------------------------------------------------------
// Buffered per-partition execution

namespace detail {
template <typename Op>
RowResult invoke_guarded(Op& op, const Row& row, std::size_t index, JobMetrics* metrics) {
  struct Probe {
    JobMetrics* m;
    explicit Probe(JobMetrics* m) : m(m) {
      if (m) m->op_started();
    }
    ~Probe() {
      if (m) m->op_finished();
    }
  } probe{metrics};
  try {
    return op(row, index);
  } catch (const Error& e) {
    return RowFailure{e.kind(), e.what(), 1};
  } catch (const std::exception& e) {
    return RowFailure{ErrorKind::service_error, e.what(), 1};
  }
}
}  // namespace detail

/// Runs `op` over the rows keeping at most `async_factor` invocations pending
/// at once; results come back in input order. Op signature:
/// RowResult(const Row&, std::size_t input_index). A=1 degenerates to a plain
/// sequential loop on the calling thread. Per-row errors become Failure
/// outcomes, never exceptions.
template <typename Op>
std::vector<RowOutcome> map_partition_buffered(const std::vector<Row>& rows, Op&& op,
                                               int async_factor, JobMetrics* metrics = nullptr) {
  if (async_factor < 1 || async_factor > 1024)
    raise(ErrorKind::invalid_config, "async_factor must be in [1, 1024]");

  std::vector<RowOutcome> out;
  out.reserve(rows.size());

  if (async_factor == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.push_back(RowOutcome{i, detail::invoke_guarded(op, rows[i], i, metrics)});
    return out;
  }

  // Sliding window of deferred results: fill to A, then repeatedly harvest
  // the oldest and top the window back up. Completion reordering inside the
  // window is invisible to the caller.
  std::deque<std::pair<std::size_t, std::future<RowResult>>> window;
  std::size_t next = 0;
  auto launch = [&](std::size_t i) {
    window.emplace_back(i, std::async(std::launch::async, [&op, &rows, i, metrics]() {
                          return detail::invoke_guarded(op, rows[i], i, metrics);
                        }));
  };
  while (next < rows.size() || !window.empty()) {
    while (next < rows.size() && window.size() < static_cast<std::size_t>(async_factor))
      launch(next++);
    auto [index, fut] = std::move(window.front());
    window.pop_front();
    out.push_back(RowOutcome{index, fut.get()});
  }
  return out;
}

/// Generic form of the buffered window: runs `op` over indices [0, count)
/// with at most `async_factor` invocations pending, yielding results in index
/// order. `op` must not throw — callers that can fail encode it in T.
template <typename Op>
auto map_indexed_buffered(std::size_t count, Op&& op, int async_factor,
                          JobMetrics* metrics = nullptr) -> std::vector<decltype(op(0))> {
  using T = decltype(op(0));
  if (async_factor < 1 || async_factor > 1024)
    raise(ErrorKind::invalid_config, "async_factor must be in [1, 1024]");

  auto guarded = [&op, metrics](std::size_t i) -> T {
    struct Probe {
      JobMetrics* m;
      explicit Probe(JobMetrics* m) : m(m) {
        if (m) m->op_started();
      }
      ~Probe() {
        if (m) m->op_finished();
      }
    } probe{metrics};
    return op(i);
  };

  std::vector<T> out;
  out.reserve(count);
  if (async_factor == 1) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(guarded(i));
    return out;
  }

  std::deque<std::future<T>> window;
  std::size_t next = 0;
  while (next < count || !window.empty()) {
    while (next < count && window.size() < static_cast<std::size_t>(async_factor)) {
      window.push_back(std::async(std::launch::async, guarded, next));
      ++next;
    }
    std::future<T> fut = std::move(window.front());
    window.pop_front();
    out.push_back(fut.get());
  }
  return out;
}

/// Dispatches partition indices [0, count) to at most `worker_threads`
/// concurrent workers; each index is handled by exactly one worker.
template <typename Fn>
void parallel_partitions(std::size_t count, int worker_threads, Fn&& fn) {
  if (worker_threads < 1) raise(ErrorKind::invalid_config, "worker_threads must be >= 1");
  if (count == 0) return;
  std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(worker_threads), count);
  if (pool == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> workers;
  workers.reserve(pool);
  std::vector<std::exception_ptr> errors(pool);
  for (std::size_t w = 0; w < pool; ++w) {
    workers.emplace_back([&, w]() {
      try {
        for (;;) {
          std::size_t i = cursor.fetch_add(1, std::memory_order_relaxed);
          if (i >= count) return;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Applies `op` across the whole table — partitions in parallel (up to
/// worker_threads), rows within a partition via the buffered window — and
/// returns the table extended with one outcome column. Failures land in that
/// column as failure_value maps.
template <typename Op>
DataTable run_table_job(const DataTable& t, Op&& op, const AsyncConfig& cfg,
                        const std::string& output_column, JobMetrics* metrics = nullptr) {
  cfg.validate();
  auto started = std::chrono::steady_clock::now();

  std::vector<std::vector<RowOutcome>> per_partition(t.partition_count());
  parallel_partitions(t.partition_count(), cfg.worker_threads, [&](std::size_t p) {
    per_partition[p] = map_partition_buffered(t.partition(p), op, cfg.async_factor, metrics);
  });

  std::vector<Value> column;
  column.reserve(t.num_rows());
  for (const auto& outcomes : per_partition) {
    for (const RowOutcome& o : outcomes) {
      if (auto* f = std::get_if<RowFailure>(&o.result)) {
        if (metrics) metrics->record_failure();
        column.push_back(failure_value(*f));
      } else {
        column.push_back(std::get<Value>(o.result));
      }
    }
  }

  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  if (metrics) metrics->record_job(t.num_rows(), wall_ms);
  return t.with_column(output_column, ValueKind::any, std::move(column));
}

}  // namespace msvc
