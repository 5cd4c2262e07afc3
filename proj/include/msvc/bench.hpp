#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "msvc/engine.hpp"
#include "msvc/errors.hpp"
#include "msvc/reliability.hpp"
#include "msvc/services.hpp"
#include "msvc/table.hpp"
#include "msvc/transformer.hpp"
#include "msvc/transport.hpp"
#include "msvc/util.hpp"

namespace msvc {

enum class ExperimentKind { throughput, async_sweep, partition_sweep, latency };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::throughput;
  int rows = 1000;
  ServiceKind service = ServiceKind::sentiment;
  std::vector<int> partitions = {1};
  std::vector<int> async_factors = {1};
  std::string server_url;
  int repetitions = 3;
  int batch_size = 1;
  int worker_threads = 8;
  RetryPolicy retry_policy;
  int request_timeout_ms = 30000;
  double inject_delay_ms = 50.0;  // extra client-side delay for the remote preset
  std::uint64_t seed = 42;

  void validate() const {
    if (kind != ExperimentKind::latency && rows < 100)
      raise(ErrorKind::invalid_config, "throughput experiments need at least 100 rows");
    if (rows < 1) raise(ErrorKind::invalid_config, "rows must be >= 1");
    if (repetitions < 3) raise(ErrorKind::invalid_config, "repetitions must be >= 3");
    if (partitions.empty() || async_factors.empty())
      raise(ErrorKind::invalid_config, "partitions and async_factors must be non-empty");
    if (server_url.empty()) raise(ErrorKind::invalid_config, "server_url is required");
    retry_policy.validate();
  }
};

struct MeasurementRow {
  std::string experiment;
  int partitions = 1;
  int async_factor = 1;
  int rows = 0;
  double wall_ms = 0.0;
  double rows_per_sec = 0.0;
  std::uint64_t retries = 0;
  std::uint64_t failures = 0;
};

struct RunRecord {
  int partitions = 1;
  int async_factor = 1;
  int worker_threads = 1;
  MetricsSnapshot metrics;
};

struct ExperimentOutput {
  std::vector<MeasurementRow> rows;
  std::vector<RunRecord> runs;  // every measured (non-warmup) run
};

// ---------------------------------------------------------------------------
// Input generators (deterministic per seed)

namespace detail {

inline std::string random_text(std::mt19937_64& rng) {
  static const char* const kFiller[] = {"the",    "weather", "report", "today",  "meeting",
                                        "coffee", "project", "update", "launch", "window"};
  static const char* const kPositive[] = {"good", "great", "excellent", "love", "wonderful"};
  static const char* const kNegative[] = {"bad", "terrible", "hate", "awful", "poor"};
  std::uniform_int_distribution<int> len(6, 12);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> mood(0, 4);
  std::uniform_int_distribution<int> flavor(0, 3);
  int n = len(rng);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    int f = flavor(rng);
    if (f == 0)
      out += kPositive[mood(rng)];
    else if (f == 1)
      out += kNegative[mood(rng)];
    else
      out += kFiller[pick(rng)];
  }
  return out;
}

}  // namespace detail

inline DataTable make_text_table(int rows, int partitions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Schema schema({Column{"text", ValueKind::text}});
  std::vector<Row> data;
  data.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) data.push_back(Row{{Value::text(detail::random_text(rng))}});
  return DataTable::from_rows(std::move(data), schema, partitions);
}

/// Images for the mock fleet are JSON payloads with an embedded text field
/// (what its OCR route "reads"), stored as raw bytes.
inline DataTable make_image_table(int rows, int partitions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Schema schema({Column{"image", ValueKind::bytes}});
  std::vector<Row> data;
  data.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    Value::Map m;
    m.emplace("text", Value::text("page " + std::to_string(i) + ": " + detail::random_text(rng)));
    std::string json = value_to_json_text(Value::map(std::move(m)));
    data.push_back(
        Row{{Value::bytes(std::vector<std::uint8_t>(json.begin(), json.end()))}});
  }
  return DataTable::from_rows(std::move(data), schema, partitions);
}

inline DataTable make_mixed_script_table(int rows, int partitions, std::uint64_t seed) {
  static const char* const kSamples[] = {
      "the launch went great today",          // en
      "안녕하세요 좋은 아침입니다",               // ko
      "おはようございます 今日は晴れ",            // ja
      "今天天气很好 我们出发吧",                  // zh
      "доброе утро погода отличная",          // ru
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 4);
  Schema schema({Column{"text", ValueKind::text}});
  std::vector<Row> data;
  data.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    std::string text = kSamples[pick(rng)];
    text += " #" + std::to_string(i);  // keep rows distinct without changing the script
    data.push_back(Row{{Value::text(text)}});
  }
  return DataTable::from_rows(std::move(data), schema, partitions);
}

inline DataTable make_series_table(int rows, int partitions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(12, 24);
  std::uniform_real_distribution<double> base(5.0, 15.0);
  std::uniform_real_distribution<double> wobble(-1.0, 1.0);
  std::uniform_int_distribution<int> outlier(0, 2);
  Schema schema({Column{"series", ValueKind::list}});
  std::vector<Row> data;
  data.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    int n = len(rng);
    double level = base(rng);
    int spike_at = outlier(rng) == 0 ? static_cast<int>(rng() % n) : -1;
    Value::List series;
    for (int p = 0; p < n; ++p) {
      char ts[32];
      std::snprintf(ts, sizeof(ts), "2026-01-01T%02d:00:00Z", p);
      double v = level + wobble(rng);
      if (p == spike_at) v += 50.0;
      Value::Map point;
      point.emplace("timestamp", Value::text(ts));
      point.emplace("value", Value::real(v));
      series.push_back(Value::map(std::move(point)));
    }
    data.push_back(Row{{Value::list(std::move(series))}});
  }
  return DataTable::from_rows(std::move(data), schema, partitions);
}

inline DataTable make_service_table(ServiceKind kind, int rows, int partitions,
                                    std::uint64_t seed) {
  switch (kind) {
    case ServiceKind::ocr:
    case ServiceKind::tag_image: return make_image_table(rows, partitions, seed);
    case ServiceKind::anomaly_detect: return make_series_table(rows, partitions, seed);
    default: return make_text_table(rows, partitions, seed);
  }
}

/// Standard enrichment step for a generated table: binds the one data column
/// the generators produce.
inline ServiceTransformer bench_transformer(ServiceKind kind, const std::string& url, int batch,
                                            int async_factor, int worker_threads,
                                            const RetryPolicy& policy, int timeout_ms,
                                            const std::string& output_column = "result") {
  TransformerBuilder builder(kind);
  builder.set_url(url).set_output_column(output_column).set_batch_size(batch);
  switch (kind) {
    case ServiceKind::ocr:
    case ServiceKind::tag_image: builder.set_param("image", bind_column("image")); break;
    case ServiceKind::anomaly_detect: builder.set_param("series", bind_column("series")); break;
    default: builder.set_param("text", bind_column("text")); break;
  }
  builder.set_retry_policy(policy);
  builder.set_async_config(AsyncConfig{async_factor, timeout_ms, worker_threads});
  return builder.build();
}

// ---------------------------------------------------------------------------
// Measurement plumbing

namespace detail {

struct ArmMeasurement {
  MeasurementRow row;
  std::vector<RunRecord> runs;
  std::vector<double> latencies_ms;  // pooled over measured runs
};

/// One warm-up run, then `reps` measured runs; wall_ms is the median, and
/// retries/failures come from the run holding that median.
inline ArmMeasurement measure_arm(const std::string& experiment, const DataTable& t,
                                  ServiceKind kind, const std::string& url, int batch,
                                  int async_factor, int worker_threads,
                                  const RetryPolicy& policy, int timeout_ms, Transport& transport,
                                  BackpressureGate& gate, int reps, std::uint64_t seed) {
  ServiceTransformer tr =
      bench_transformer(kind, url, batch, async_factor, worker_threads, policy, timeout_ms);

  auto run_once = [&](std::uint64_t run_seed) {
    JobMetrics metrics;
    TransformContext ctx;
    ctx.transport = &transport;
    ctx.gate = &gate;
    ctx.clock = &real_clock();
    ctx.seed = run_seed;
    ctx.metrics = &metrics;
    transform(t, tr, ctx);
    return metrics.snapshot();
  };

  run_once(seed);  // warm-up primes connections; not recorded

  ArmMeasurement out;
  std::vector<MetricsSnapshot> snapshots;
  for (int r = 0; r < reps; ++r) {
    MetricsSnapshot snap = run_once(seed + 1 + static_cast<std::uint64_t>(r));
    out.runs.push_back(RunRecord{t.partition_count() > 0 ? static_cast<int>(t.partition_count()) : 1,
                                 async_factor, worker_threads, snap});
    for (double l : snap.latencies_ms) out.latencies_ms.push_back(l);
    snapshots.push_back(std::move(snap));
  }

  std::vector<std::size_t> order(snapshots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return snapshots[a].wall_ms < snapshots[b].wall_ms;
  });
  std::size_t mid = order[(order.size() - 1) / 2];
  std::vector<double> walls;
  for (const MetricsSnapshot& s : snapshots) walls.push_back(s.wall_ms);
  double wall = median(walls);

  out.row.experiment = experiment;
  out.row.partitions = static_cast<int>(t.partition_count());
  out.row.async_factor = async_factor;
  out.row.rows = static_cast<int>(t.num_rows());
  out.row.wall_ms = wall;
  out.row.rows_per_sec = wall > 0.0 ? static_cast<double>(t.num_rows()) / (wall / 1000.0) : 0.0;
  out.row.retries = snapshots[mid].retries;
  out.row.failures = snapshots[mid].failures;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

inline ExperimentOutput run_partition_sweep(const ExperimentSpec& spec) {
  spec.validate();
  DataTable base = make_service_table(spec.service, spec.rows, 1, spec.seed);
  HttplibTransport transport(TransportOptions{2000, spec.request_timeout_ms, 0.0});
  BackpressureGate gate;
  ExperimentOutput out;
  int async_factor = spec.async_factors.front();
  for (int p : spec.partitions) {
    DataTable t = base.repartition(p);
    detail::ArmMeasurement arm = detail::measure_arm(
        "partition-sweep", t, spec.service, spec.server_url, spec.batch_size, async_factor,
        spec.worker_threads, spec.retry_policy, spec.request_timeout_ms, transport, gate,
        spec.repetitions, spec.seed + static_cast<std::uint64_t>(p) * 1000);
    out.rows.push_back(arm.row);
    out.runs.insert(out.runs.end(), arm.runs.begin(), arm.runs.end());
  }
  return out;
}

inline ExperimentOutput run_async_sweep(const ExperimentSpec& spec) {
  spec.validate();
  int partitions = spec.partitions.front();
  DataTable t = make_service_table(spec.service, spec.rows, partitions, spec.seed);
  HttplibTransport transport(TransportOptions{2000, spec.request_timeout_ms, 0.0});
  BackpressureGate gate;
  ExperimentOutput out;
  for (int a : spec.async_factors) {
    detail::ArmMeasurement arm = detail::measure_arm(
        "async-sweep", t, spec.service, spec.server_url, spec.batch_size, a, spec.worker_threads,
        spec.retry_policy, spec.request_timeout_ms, transport, gate, spec.repetitions,
        spec.seed + static_cast<std::uint64_t>(a) * 1000);
    out.rows.push_back(arm.row);
    out.runs.insert(out.runs.end(), arm.runs.begin(), arm.runs.end());
  }
  return out;
}

inline ExperimentOutput run_sync_vs_async(const ExperimentSpec& spec) {
  spec.validate();
  int partitions = spec.partitions.front();
  DataTable t = make_service_table(spec.service, spec.rows, partitions, spec.seed);
  HttplibTransport transport(TransportOptions{2000, spec.request_timeout_ms, 0.0});
  BackpressureGate gate;
  ExperimentOutput out;
  std::vector<int> arms = {1, 8};
  if (spec.async_factors.size() >= 2) arms = {spec.async_factors.front(), spec.async_factors.back()};
  for (int a : arms) {
    detail::ArmMeasurement arm = detail::measure_arm(
        "sync-vs-async", t, spec.service, spec.server_url, spec.batch_size, a,
        spec.worker_threads, spec.retry_policy, spec.request_timeout_ms, transport, gate,
        spec.repetitions, spec.seed + static_cast<std::uint64_t>(a) * 1000);
    out.rows.push_back(arm.row);
    out.runs.insert(out.runs.end(), arm.runs.begin(), arm.runs.end());
  }
  return out;
}

struct LatencyOutput {
  ExperimentOutput output;
  double local_median_ms = 0.0;
  double remote_median_ms = 0.0;
};

/// Same service, two deployment presets: loopback as-is ("local") and with a
/// fixed client-side delay on every request ("remote").
inline LatencyOutput run_latency_experiment(const ExperimentSpec& spec) {
  spec.validate();
  int partitions = spec.partitions.front();
  int async_factor = spec.async_factors.front();
  DataTable t = make_service_table(spec.service, spec.rows, partitions, spec.seed);
  BackpressureGate gate;
  LatencyOutput result;

  HttplibTransport local(TransportOptions{2000, spec.request_timeout_ms, 0.0});
  detail::ArmMeasurement local_arm = detail::measure_arm(
      "latency-local", t, spec.service, spec.server_url, spec.batch_size, async_factor,
      spec.worker_threads, spec.retry_policy, spec.request_timeout_ms, local, gate,
      spec.repetitions, spec.seed);
  result.local_median_ms = median(local_arm.latencies_ms);
  result.output.rows.push_back(local_arm.row);
  result.output.runs.insert(result.output.runs.end(), local_arm.runs.begin(),
                            local_arm.runs.end());

  HttplibTransport remote(TransportOptions{2000, spec.request_timeout_ms, spec.inject_delay_ms});
  detail::ArmMeasurement remote_arm = detail::measure_arm(
      "latency-remote", t, spec.service, spec.server_url, spec.batch_size, async_factor,
      spec.worker_threads, spec.retry_policy, spec.request_timeout_ms, remote, gate,
      spec.repetitions, spec.seed);
  result.remote_median_ms = median(remote_arm.latencies_ms);
  result.output.rows.push_back(remote_arm.row);
  result.output.runs.insert(result.output.runs.end(), remote_arm.runs.begin(),
                            remote_arm.runs.end());
  return result;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_csv(const std::vector<MeasurementRow>& rows) {
  std::string out = "experiment,partitions,async_factor,rows,wall_ms,rows_per_sec,retries,failures\n";
  char buf[64];
  for (const MeasurementRow& r : rows) {
    out += csv_field(r.experiment);
    out += ',' + std::to_string(r.partitions);
    out += ',' + std::to_string(r.async_factor);
    out += ',' + std::to_string(r.rows);
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
    out += ',';
    out += buf;
    std::snprintf(buf, sizeof(buf), "%.3f", r.rows_per_sec);
    out += ',';
    out += buf;
    out += ',' + std::to_string(r.retries);
    out += ',' + std::to_string(r.failures);
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::vector<MeasurementRow>& rows, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) raise(ErrorKind::io_error, "cannot open '" + path + "' for writing");
  file << format_csv(rows);
  if (!file) raise(ErrorKind::io_error, "write to '" + path + "' failed");
}

/// Normalized throughput relative to the first row of the sweep.
inline std::vector<double> throughput_ratios(const std::vector<MeasurementRow>& rows) {
  std::vector<double> out;
  if (rows.empty()) return out;
  double baseline = rows.front().rows_per_sec;
  for (const MeasurementRow& r : rows)
    out.push_back(baseline > 0.0 ? r.rows_per_sec / baseline : 0.0);
  return out;
}

}  // namespace msvc
