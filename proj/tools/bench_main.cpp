#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "msvc/bench.hpp"
#include "msvc/mockserver.hpp"

#include <CLI11.hpp>

namespace {

struct CommonFlags {
  int rows = 1000;
  std::string service = "sentiment";
  std::string server;
  std::vector<int> partitions = {1, 2, 4, 8};
  std::vector<int> async_factors = {1, 2, 4, 8, 16, 32};
  int reps = 3;
  std::string out_path;
  bool do_assert = false;
  bool spawn_mock = false;
  double latency_ms = 50.0;
  std::string latency_dist = "constant";
  double inject_delay_ms = 50.0;
  int batch = 0;  // 0 = service maximum
  int workers = 8;
  int max_retries = 5;
  double base_delay_ms = 100.0;
  double backoff_mult = 2.0;
  double jitter = 0.2;
  int timeout_ms = 30000;
  std::uint64_t seed = 42;
  std::string input_path;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--rows", f.rows, "table size");
  cmd->add_option("--service", f.service,
                  "sentiment|language|keyPhrases|entities|ocr|tag|anomaly");
  cmd->add_option("--server", f.server, "base url of the service fleet");
  cmd->add_option("--partitions", f.partitions, "partition counts, comma separated")
      ->delimiter(',');
  cmd->add_option("--async", f.async_factors, "async factors, comma separated")->delimiter(',');
  cmd->add_option("--reps", f.reps, "measured repetitions (median reported)");
  cmd->add_option("--out", f.out_path, "CSV output path (stdout if omitted)");
  cmd->add_flag("--assert", f.do_assert, "exit 2 when thresholds are missed");
  cmd->add_flag("--spawn-mock", f.spawn_mock, "start an in-process mock fleet");
  cmd->add_option("--latency-ms", f.latency_ms, "spawned mock service latency");
  cmd->add_option("--latency-dist", f.latency_dist, "spawned mock latency distribution")
      ->check(CLI::IsMember({"constant", "exponential"}));
  cmd->add_option("--inject-delay-ms", f.inject_delay_ms,
                  "client-side delay for the remote preset (latency experiment)");
  cmd->add_option("--batch", f.batch, "batch size (default: service maximum)");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--max-retries", f.max_retries, "retry policy: max retries");
  cmd->add_option("--base-delay-ms", f.base_delay_ms, "retry policy: base delay");
  cmd->add_option("--backoff-mult", f.backoff_mult, "retry policy: multiplier");
  cmd->add_option("--jitter", f.jitter, "retry policy: jitter fraction");
  cmd->add_option("--timeout-ms", f.timeout_ms, "request timeout");
  cmd->add_option("--seed", f.seed, "data and jitter seed");
  cmd->add_option("--input", f.input_path, "JSON-lines input instead of generated data");
}

msvc::Schema input_schema(msvc::ServiceKind kind) {
  using msvc::Column;
  using msvc::ValueKind;
  switch (kind) {
    case msvc::ServiceKind::ocr:
    case msvc::ServiceKind::tag_image:
      return msvc::Schema({Column{"image", ValueKind::text}});  // base64 text
    case msvc::ServiceKind::anomaly_detect:
      return msvc::Schema({Column{"series", ValueKind::list}});
    default: return msvc::Schema({Column{"text", ValueKind::text}});
  }
}

msvc::ExperimentSpec build_spec(const CommonFlags& f, msvc::ExperimentKind kind,
                                const std::string& server_url) {
  auto service = msvc::service_kind_from_name(f.service);
  if (!service) {
    std::cerr << "unknown service '" << f.service << "'\n";
    std::exit(1);
  }
  msvc::ExperimentSpec spec;
  spec.kind = kind;
  spec.rows = f.rows;
  spec.service = *service;
  spec.partitions = f.partitions;
  spec.async_factors = f.async_factors;
  spec.server_url = server_url;
  spec.repetitions = f.reps;
  spec.batch_size = f.batch > 0 ? f.batch : msvc::service_spec(*service).max_batch;
  spec.worker_threads = f.workers;
  spec.retry_policy.max_retries = f.max_retries;
  spec.retry_policy.base_delay_ms = f.base_delay_ms;
  spec.retry_policy.multiplier = f.backoff_mult;
  spec.retry_policy.jitter_fraction = f.jitter;
  spec.request_timeout_ms = f.timeout_ms;
  spec.inject_delay_ms = f.inject_delay_ms;
  spec.seed = f.seed;
  return spec;
}

std::unique_ptr<msvc::MockServer> maybe_spawn(const CommonFlags& f, std::string& server_url) {
  if (!f.spawn_mock) {
    if (server_url.empty()) {
      std::cerr << "need --server or --spawn-mock\n";
      std::exit(1);
    }
    return nullptr;
  }
  msvc::ServerConfig cfg;
  cfg.port = 0;
  cfg.latency.kind = f.latency_dist == "exponential" ? msvc::LatencyModel::Kind::exponential
                                                     : msvc::LatencyModel::Kind::constant;
  cfg.latency.param_ms = f.latency_ms;
  cfg.seed = f.seed;
  auto server = std::make_unique<msvc::MockServer>(cfg);
  server->start();
  server_url = server->base_url();
  std::cerr << "spawned mock fleet at " << server_url << "\n";
  return server;
}

void emit(const msvc::ExperimentOutput& out, const CommonFlags& f) {
  std::string csv = msvc::format_csv(out.rows);
  if (f.out_path.empty()) {
    std::cout << csv;
  } else {
    msvc::write_csv(out.rows, f.out_path);
    std::cerr << "wrote " << f.out_path << "\n";
  }
  std::vector<double> ratios = msvc::throughput_ratios(out.rows);
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    std::cerr << out.rows[i].experiment << " P=" << out.rows[i].partitions
              << " A=" << out.rows[i].async_factor << " -> " << out.rows[i].rows_per_sec
              << " rows/s (x" << ratios[i] << ")\n";
  }
}

int assert_partition_sweep(const msvc::ExperimentOutput& out) {
  std::vector<double> ratios = msvc::throughput_ratios(out.rows);
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    double target = 0.8 * out.rows[i].partitions / out.rows.front().partitions;
    if (ratios[i] < target) {
      std::cerr << "ASSERT FAILED: P=" << out.rows[i].partitions << " ratio " << ratios[i]
                << " < " << target << "\n";
      return 2;
    }
  }
  return 0;
}

int assert_async_sweep(const msvc::ExperimentOutput& out) {
  std::vector<double> ratios = msvc::throughput_ratios(out.rows);
  int rc = 0;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    int a = out.rows[i].async_factor;
    if (a == 8 && ratios[i] < 4.0) rc = 2;
    if (a == 16 && ratios[i] < 8.0) rc = 2;
    if (i > 0 && ratios[i] < ratios[i - 1] * 0.9) rc = 2;
  }
  if (rc != 0) std::cerr << "ASSERT FAILED: async speedup thresholds missed\n";
  return rc;
}

int assert_sync_vs_async(const msvc::ExperimentOutput& out, msvc::ServiceKind service,
                         int batch) {
  if (out.rows.size() < 2) return 2;
  double ratio = out.rows.back().rows_per_sec / out.rows.front().rows_per_sec;
  double floor = 0.95;
  if (service == msvc::ServiceKind::ocr || service == msvc::ServiceKind::tag_image)
    floor = 2.0;
  else if (batch > 1)
    floor = 1.3;
  if (ratio < floor) {
    std::cerr << "ASSERT FAILED: sync-vs-async ratio " << ratio << " < " << floor << "\n";
    return 2;
  }
  return 0;
}

int assert_latency(const msvc::LatencyOutput& out, const CommonFlags& f) {
  double gap = out.remote_median_ms - out.local_median_ms;
  if (gap < f.inject_delay_ms - 10.0 || gap > f.inject_delay_ms + 10.0) {
    std::cerr << "ASSERT FAILED: remote-local gap " << gap << " outside "
              << f.inject_delay_ms << " +- 10 ms\n";
    return 2;
  }
  if (f.spawn_mock && std::abs(out.local_median_ms - f.latency_ms) > 5.0) {
    std::cerr << "ASSERT FAILED: local median " << out.local_median_ms
              << " not within 5 ms of configured " << f.latency_ms << "\n";
    return 2;
  }
  return 0;
}

int run_pipeline_command(const CommonFlags& f, const std::string& pipeline_path,
                         const std::string& server_url) {
  std::ifstream in(pipeline_path);
  if (!in) {
    std::cerr << "cannot open " << pipeline_path << "\n";
    return 1;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  msvc::Pipeline pipeline = msvc::pipeline_from_json(msvc::value_from_json_text(buffer.str()));

  // Stages may address the fleet by relative url: an empty or "mock" url
  // binding is replaced by the chosen server.
  for (msvc::ServiceTransformer& stage : pipeline.stages) {
    if (auto* s = std::get_if<msvc::ScalarBinding>(&stage.url)) {
      if (s->value.kind() == msvc::ValueKind::text && s->value.as_text() == "mock")
        stage.url = msvc::bind_scalar_text(server_url);
    }
  }

  int partitions = f.partitions.front();
  std::optional<msvc::DataTable> table;
  if (!f.input_path.empty()) {
    msvc::Schema schema = input_schema(pipeline.stages.empty()
                                          ? msvc::ServiceKind::sentiment
                                          : pipeline.stages.front().service);
    table = msvc::load_jsonl_file(f.input_path, schema, partitions);
  } else {
    table = msvc::make_mixed_script_table(f.rows, partitions, f.seed);
  }

  msvc::HttplibTransport transport(msvc::TransportOptions{2000, f.timeout_ms, 0.0});
  msvc::BackpressureGate gate;
  msvc::JobMetrics metrics;
  msvc::TransformContext ctx;
  ctx.transport = &transport;
  ctx.gate = &gate;
  ctx.seed = f.seed;
  ctx.metrics = &metrics;

  auto started = std::chrono::steady_clock::now();
  msvc::DataTable result = msvc::pipeline_transform(*table, pipeline, ctx);
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();

  msvc::MetricsSnapshot snap = metrics.snapshot();
  msvc::MeasurementRow row;
  row.experiment = "pipeline";
  row.partitions = partitions;
  row.async_factor = pipeline.stages.empty() ? 1 : pipeline.stages.front().async_config.async_factor;
  row.rows = static_cast<int>(result.num_rows());
  row.wall_ms = wall_ms;
  row.rows_per_sec = wall_ms > 0.0 ? result.num_rows() / (wall_ms / 1000.0) : 0.0;
  row.retries = snap.retries;
  row.failures = snap.failures;

  msvc::ExperimentOutput out;
  out.rows.push_back(row);
  emit(out, f);
  if (f.do_assert && snap.failures > 0) {
    std::cerr << "ASSERT FAILED: " << snap.failures << " failed rows\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msvc-bench: throughput and latency experiments against a service fleet"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string pipeline_path;
  CLI::App* partition_cmd = app.add_subcommand("partition-sweep", "vary partition count");
  CLI::App* async_cmd = app.add_subcommand("async-sweep", "vary in-flight factor");
  CLI::App* latency_cmd = app.add_subcommand("latency", "local vs injected-delay remote");
  CLI::App* sync_cmd = app.add_subcommand("sync-vs-async", "A=1 against A=8");
  CLI::App* pipeline_cmd = app.add_subcommand("pipeline", "run a JSON-described pipeline");
  for (CLI::App* cmd : {partition_cmd, async_cmd, latency_cmd, sync_cmd, pipeline_cmd})
    add_common(cmd, flags);
  pipeline_cmd->add_option("--pipeline", pipeline_path, "pipeline description JSON")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    std::string server_url = flags.server;
    std::unique_ptr<msvc::MockServer> mock = maybe_spawn(flags, server_url);

    if (partition_cmd->parsed()) {
      msvc::ExperimentSpec spec =
          build_spec(flags, msvc::ExperimentKind::partition_sweep, server_url);
      msvc::ExperimentOutput out = msvc::run_partition_sweep(spec);
      emit(out, flags);
      return flags.do_assert ? assert_partition_sweep(out) : 0;
    }
    if (async_cmd->parsed()) {
      msvc::ExperimentSpec spec = build_spec(flags, msvc::ExperimentKind::async_sweep, server_url);
      spec.partitions = {flags.partitions.front()};
      msvc::ExperimentOutput out = msvc::run_async_sweep(spec);
      emit(out, flags);
      return flags.do_assert ? assert_async_sweep(out) : 0;
    }
    if (latency_cmd->parsed()) {
      msvc::ExperimentSpec spec = build_spec(flags, msvc::ExperimentKind::latency, server_url);
      msvc::LatencyOutput out = msvc::run_latency_experiment(spec);
      emit(out.output, flags);
      std::cerr << "median local=" << out.local_median_ms << " ms, remote="
                << out.remote_median_ms << " ms, gap="
                << out.remote_median_ms - out.local_median_ms << " ms\n";
      return flags.do_assert ? assert_latency(out, flags) : 0;
    }
    if (sync_cmd->parsed()) {
      msvc::ExperimentSpec spec = build_spec(flags, msvc::ExperimentKind::throughput, server_url);
      msvc::ExperimentOutput out = msvc::run_sync_vs_async(spec);
      emit(out, flags);
      return flags.do_assert ? assert_sync_vs_async(out, spec.service, spec.batch_size) : 0;
    }
    if (pipeline_cmd->parsed()) return run_pipeline_command(flags, pipeline_path, server_url);
  } catch (const msvc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
