#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "msvc/clock.hpp"
#include "msvc/engine.hpp"
#include "msvc/errors.hpp"
#include "msvc/reliability.hpp"
#include "msvc/services.hpp"
#include "msvc/table.hpp"
#include "msvc/transport.hpp"
#include "msvc/util.hpp"
#include "msvc/value.hpp"

namespace msvc {

struct ScalarBinding {
  Value value;
};
struct ColumnBinding {
  std::string name;
};
using ParamBinding = std::variant<ScalarBinding, ColumnBinding>;

inline ParamBinding bind_scalar(Value v) { return ScalarBinding{std::move(v)}; }
inline ParamBinding bind_scalar_text(std::string s) {
  return ScalarBinding{Value::text(std::move(s))};
}
inline ParamBinding bind_column(std::string name) { return ColumnBinding{std::move(name)}; }

struct ServiceTransformer {
  ServiceKind service = ServiceKind::sentiment;
  ParamBinding url;
  std::optional<ParamBinding> api_key;
  std::map<std::string, ParamBinding> inputs;
  std::string output_column;
  int batch_size = 1;
  RetryPolicy retry_policy;
  AsyncConfig async_config;
};

/// Fluent construction; later writes to the same parameter override earlier
/// ones. Validation happens in build().
class TransformerBuilder {
 public:
  explicit TransformerBuilder(ServiceKind kind) { t_.service = kind; }

  TransformerBuilder& set_url(ParamBinding b) {
    t_.url = std::move(b);
    has_url_ = true;
    return *this;
  }
  TransformerBuilder& set_url(std::string url) { return set_url(bind_scalar_text(std::move(url))); }
  TransformerBuilder& set_api_key(ParamBinding b) {
    t_.api_key = std::move(b);
    return *this;
  }
  TransformerBuilder& set_param(const std::string& name, ParamBinding b) {
    t_.inputs[name] = std::move(b);  // last write wins
    return *this;
  }
  TransformerBuilder& set_output_column(std::string name) {
    t_.output_column = std::move(name);
    return *this;
  }
  TransformerBuilder& set_batch_size(int b) {
    t_.batch_size = b;
    return *this;
  }
  TransformerBuilder& set_retry_policy(RetryPolicy p) {
    t_.retry_policy = std::move(p);
    return *this;
  }
  TransformerBuilder& set_async_config(AsyncConfig c) {
    t_.async_config = c;
    return *this;
  }

  ServiceTransformer build() const {
    const ServiceSpec& spec = service_spec(t_.service);
    if (!has_url_) raise(ErrorKind::invalid_config, "url binding is required");
    if (t_.output_column.empty()) raise(ErrorKind::invalid_config, "output column is required");
    for (const auto& [name, binding] : t_.inputs) {
      if (spec.required_params.count(name) == 0 && spec.optional_params.count(name) == 0)
        raise(ErrorKind::unknown_parameter,
              std::string(spec.name) + " does not accept '" + name + "'");
    }
    for (const std::string& name : spec.required_params) {
      if (t_.inputs.count(name) == 0)
        raise(ErrorKind::missing_required_parameter,
              std::string(spec.name) + " needs a binding for '" + name + "'");
    }
    if (t_.batch_size < 1 || t_.batch_size > spec.max_batch)
      raise(ErrorKind::batch_too_large, std::string(spec.name) + " allows batch size 1.." +
                                            std::to_string(spec.max_batch));
    t_.retry_policy.validate();
    t_.async_config.validate();
    return t_;
  }

 private:
  ServiceTransformer t_;
  bool has_url_ = false;
};

inline TransformerBuilder transformer(ServiceKind kind) { return TransformerBuilder(kind); }

// ---------------------------------------------------------------------------
// Binding resolution

inline Value resolve_binding(const ParamBinding& binding, const Schema& schema, const Row& row) {
  if (const auto* s = std::get_if<ScalarBinding>(&binding)) return s->value;
  const auto& c = std::get<ColumnBinding>(binding);
  auto idx = schema.index_of(c.name);
  if (!idx) raise(ErrorKind::missing_column, "no column '" + c.name + "'");
  return row.values[*idx];
}

/// Materializes every input binding for one row. Null column values pass
/// through as Null; the transform loop decides whether that skips the row.
inline ResolvedParams resolve_bindings(const Row& row, const Schema& schema,
                                       const ServiceTransformer& t) {
  ResolvedParams out;
  for (const auto& [name, binding] : t.inputs) out.emplace(name, resolve_binding(binding, schema, row));
  return out;
}

/// Consecutive chunks of at most `batch_size`; order preserved.
inline std::vector<std::vector<Row>> batch_partition(const std::vector<Row>& rows,
                                                     int batch_size) {
  if (batch_size < 1) raise(ErrorKind::invalid_config, "batch_size must be >= 1");
  std::vector<std::vector<Row>> out;
  for (std::size_t start = 0; start < rows.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
    out.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(start),
                     rows.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transform execution

struct TransformContext {
  Transport* transport = nullptr;
  BackpressureGate* gate = nullptr;
  Clock* clock = &real_clock();
  std::uint64_t seed = 0;
  JobMetrics* metrics = nullptr;
};

namespace detail {

inline bool skip_input(const Value& v) { return v.kind() == ValueKind::null_ || is_failure_value(v); }

inline SendHooks metric_hooks(JobMetrics* metrics) {
  SendHooks hooks;
  if (metrics) {
    hooks.on_status = [metrics](int status) { metrics->record_status(status); };
    hooks.on_retry = [metrics]() { metrics->record_retry(); };
    hooks.on_transport_error = [metrics]() { metrics->record_transport_error(); };
  }
  return hooks;
}

struct BatchGroup {
  std::vector<std::size_t> slots;  // positions within the batch
  std::vector<ResolvedParams> params;
  std::string url;
  std::optional<std::string> api_key;
};

/// Sends one group (uniform url/key) and fans results back out; on a payload
/// that fails validation the request is reissued once before giving up.
inline std::vector<RowResult> send_group(const ServiceTransformer& t, const BatchGroup& group,
                                         const TransformContext& ctx, std::mt19937_64& rng) {
  HttpRequestData request;
  try {
    request = build_service_request(t.service, group.params, group.url, group.api_key);
  } catch (const Error& e) {
    return std::vector<RowResult>(group.params.size(),
                                  RowResult{RowFailure{e.kind(), e.what(), 1}});
  }

  SendHooks hooks = metric_hooks(ctx.metrics);
  int total_attempts = 0;
  RowFailure last;
  for (int round = 0; round < 2; ++round) {  // payload-level retry: one extra round
    SendResult sent = send_with_policy(request, t.retry_policy, *ctx.gate, *ctx.clock,
                                       *ctx.transport, rng, hooks);
    if (auto* failure = std::get_if<SendFailure>(&sent)) {
      total_attempts += failure->attempts;
      return std::vector<RowResult>(
          group.params.size(),
          RowResult{RowFailure{failure->kind, failure->message, total_attempts}});
    }
    auto& ok = std::get<SendSuccess>(sent);
    total_attempts += ok.attempts;
    if (ctx.metrics) ctx.metrics->record_latency(ok.response.latency_ms);
    try {
      Value parsed = parse_service_response(t.service, ok.response);
      return unbatch_responses(t.service, group.params.size(), parsed);
    } catch (const Error& e) {
      last = RowFailure{e.kind(), e.what(), total_attempts};
      if (round == 0 && ctx.metrics) ctx.metrics->record_retry();
    }
  }
  return std::vector<RowResult>(group.params.size(), RowResult{last});
}

inline std::vector<RowResult> process_batch(const ServiceTransformer& t, const Schema& schema,
                                            const std::vector<Row>& batch,
                                            const TransformContext& ctx, std::mt19937_64& rng) {
  std::vector<RowResult> results(batch.size(), RowResult{Value::null()});

  // Resolve per-row params, drop rows with Null/Failure inputs, and split the
  // rest into consecutive runs sharing a target url and key (they differ only
  // when those are column-bound).
  std::vector<BatchGroup> groups;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Row& row = batch[i];
    Value url_value = resolve_binding(t.url, schema, row);
    std::optional<Value> key_value;
    if (t.api_key) key_value = resolve_binding(*t.api_key, schema, row);

    ResolvedParams params = resolve_bindings(row, schema, t);
    bool skip = skip_input(url_value) ||
                (key_value && skip_input(*key_value));
    for (const auto& [name, value] : params)
      if (skip_input(value)) skip = true;
    if (skip) continue;  // leaves Null in the output slot

    if (url_value.kind() != ValueKind::text)
      raise(ErrorKind::schema_violation, "url binding must resolve to text");
    std::string url = url_value.as_text();
    std::optional<std::string> api_key;
    if (key_value) {
      if (key_value->kind() != ValueKind::text)
        raise(ErrorKind::schema_violation, "api key binding must resolve to text");
      api_key = key_value->as_text();
    }

    if (groups.empty() || groups.back().url != url || groups.back().api_key != api_key)
      groups.push_back(BatchGroup{{}, {}, std::move(url), std::move(api_key)});
    groups.back().slots.push_back(i);
    groups.back().params.push_back(std::move(params));
  }

  for (const BatchGroup& group : groups) {
    std::vector<RowResult> group_results = send_group(t, group, ctx, rng);
    for (std::size_t j = 0; j < group.slots.size(); ++j)
      results[group.slots[j]] = std::move(group_results[j]);
  }
  return results;
}

inline void validate_transformer_against(const Schema& schema, const ServiceTransformer& t) {
  if (schema.has_column(t.output_column))
    raise(ErrorKind::duplicate_column, "output column '" + t.output_column + "' already exists");
  auto check = [&](const ParamBinding& b, const std::string& what) {
    if (const auto* c = std::get_if<ColumnBinding>(&b)) {
      if (!schema.has_column(c->name))
        raise(ErrorKind::missing_column, what + " binds missing column '" + c->name + "'");
    }
  };
  check(t.url, "url");
  if (t.api_key) check(*t.api_key, "api key");
  for (const auto& [name, binding] : t.inputs) check(binding, "parameter '" + name + "'");
}

}  // namespace detail

/// Applies one enrichment step: batches each partition, issues one request
/// per batch through the buffered async window, and appends the parsed
/// results as a new column. Row count and existing columns are untouched;
/// batch-level failures surface as failure maps on every row of the batch.
inline DataTable transform(const DataTable& t, const ServiceTransformer& tr,
                           const TransformContext& ctx) {
  if (ctx.transport == nullptr || ctx.gate == nullptr || ctx.clock == nullptr)
    raise(ErrorKind::invalid_config, "transform context needs transport, gate and clock");
  detail::validate_transformer_against(t.schema(), tr);
  tr.async_config.validate();
  tr.retry_policy.validate();

  auto started = std::chrono::steady_clock::now();
  const Schema& schema = t.schema();

  std::vector<std::vector<RowResult>> per_partition(t.partition_count());
  parallel_partitions(t.partition_count(), tr.async_config.worker_threads, [&](std::size_t p) {
    std::vector<std::vector<Row>> batches = batch_partition(t.partition(p), tr.batch_size);
    auto batch_results = map_indexed_buffered(
        batches.size(),
        [&](std::size_t b) -> std::vector<RowResult> {
          // Deterministic per-batch jitter stream, race-free across the window.
          std::mt19937_64 rng(mix64(ctx.seed ^ mix64((p << 20) ^ b)));
          try {
            return detail::process_batch(tr, schema, batches[b], ctx, rng);
          } catch (const Error& e) {
            return std::vector<RowResult>(batches[b].size(),
                                          RowResult{RowFailure{e.kind(), e.what(), 1}});
          } catch (const std::exception& e) {
            return std::vector<RowResult>(
                batches[b].size(),
                RowResult{RowFailure{ErrorKind::service_error, e.what(), 1}});
          }
        },
        tr.async_config.async_factor, ctx.metrics);

    std::vector<RowResult> flat;
    flat.reserve(t.partition(p).size());
    for (auto& batch : batch_results)
      for (auto& r : batch) flat.push_back(std::move(r));
    per_partition[p] = std::move(flat);
  });

  std::vector<Value> column;
  column.reserve(t.num_rows());
  for (const auto& partition_results : per_partition) {
    for (const RowResult& r : partition_results) {
      if (const auto* f = std::get_if<RowFailure>(&r)) {
        if (ctx.metrics) ctx.metrics->record_failure();
        column.push_back(failure_value(*f));
      } else {
        column.push_back(std::get<Value>(r));
      }
    }
  }

  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  if (ctx.metrics) ctx.metrics->record_job(t.num_rows(), wall_ms);
  return t.with_column(tr.output_column, ValueKind::any, std::move(column));
}

// ---------------------------------------------------------------------------
// Pipelines

struct Pipeline {
  std::vector<ServiceTransformer> stages;
};

/// Checks the whole chain before anything runs: output names distinct, and
/// each stage's column bindings resolvable against the schema as extended by
/// the stages before it.
inline void validate_pipeline(const Schema& schema, const Pipeline& p) {
  std::vector<Column> columns = schema.columns();
  std::set<std::string> outputs;
  for (const ServiceTransformer& stage : p.stages) {
    if (!outputs.insert(stage.output_column).second)
      raise(ErrorKind::duplicate_column,
            "pipeline reuses output column '" + stage.output_column + "'");
    Schema staged(columns);
    detail::validate_transformer_against(staged, stage);
    columns.push_back(Column{stage.output_column, ValueKind::any});
  }
}

/// Left fold of transform over the stages. Failure values produced by one
/// stage are skipped (as Null) by any later stage that reads them.
inline DataTable pipeline_transform(const DataTable& t, const Pipeline& p,
                                    const TransformContext& ctx) {
  validate_pipeline(t.schema(), p);
  DataTable current = t;
  for (const ServiceTransformer& stage : p.stages) current = transform(current, stage, ctx);
  return current;
}

// ---------------------------------------------------------------------------
// JSON pipeline descriptions (bench --pipeline)

namespace detail {

inline ParamBinding binding_from_value(const Value& v, const std::string& what) {
  if (v.kind() == ValueKind::text) return bind_scalar(v);  // shorthand for a text scalar
  if (v.kind() == ValueKind::map) {
    if (const Value* c = v.find("column")) {
      if (c->kind() != ValueKind::text)
        raise(ErrorKind::invalid_config, what + ": 'column' must be a string");
      return bind_column(c->as_text());
    }
    if (const Value* s = v.find("value")) return bind_scalar(*s);
  }
  raise(ErrorKind::invalid_config, what + ": binding must be {\"column\": name} or {\"value\": v}");
}

}  // namespace detail

/// Builds a pipeline from its JSON description:
/// {"stages":[{"service":"sentiment","url":...,"output_column":...,
///             "params":{"text":{"column":"text"},"language":{"value":"en"}},
///             "batch_size":10,"api_key":...,
///             "retry":{"max_retries":..,"base_delay_ms":..,"multiplier":..,"jitter":..},
///             "async":{"async_factor":..,"worker_threads":..,"request_timeout_ms":..}}]}
inline Pipeline pipeline_from_json(const Value& doc) {
  if (doc.kind() != ValueKind::map || doc.find("stages") == nullptr ||
      doc.find("stages")->kind() != ValueKind::list)
    raise(ErrorKind::invalid_config, "pipeline document needs a 'stages' array");

  Pipeline out;
  for (const Value& stage : doc.find("stages")->as_list()) {
    if (stage.kind() != ValueKind::map)
      raise(ErrorKind::invalid_config, "each stage must be an object");
    const Value* service = stage.find("service");
    if (service == nullptr || service->kind() != ValueKind::text)
      raise(ErrorKind::invalid_config, "stage needs a 'service' name");
    auto kind = service_kind_from_name(service->as_text());
    if (!kind) raise(ErrorKind::invalid_config, "unknown service '" + service->as_text() + "'");

    TransformerBuilder builder(*kind);
    const Value* url = stage.find("url");
    if (url == nullptr) raise(ErrorKind::invalid_config, "stage needs a 'url'");
    builder.set_url(detail::binding_from_value(*url, "url"));
    if (const Value* key = stage.find("api_key"))
      builder.set_api_key(detail::binding_from_value(*key, "api_key"));
    const Value* output = stage.find("output_column");
    if (output == nullptr || output->kind() != ValueKind::text)
      raise(ErrorKind::invalid_config, "stage needs an 'output_column'");
    builder.set_output_column(output->as_text());
    if (const Value* params = stage.find("params")) {
      if (params->kind() != ValueKind::map)
        raise(ErrorKind::invalid_config, "'params' must be an object");
      for (const auto& [name, binding] : params->as_map())
        builder.set_param(name, detail::binding_from_value(binding, "param '" + name + "'"));
    }
    if (const Value* b = stage.find("batch_size")) {
      if (b->kind() != ValueKind::int_)
        raise(ErrorKind::invalid_config, "'batch_size' must be an integer");
      builder.set_batch_size(static_cast<int>(b->as_int()));
    }
    if (const Value* retry = stage.find("retry")) {
      RetryPolicy policy;
      if (retry->kind() != ValueKind::map)
        raise(ErrorKind::invalid_config, "'retry' must be an object");
      if (const Value* v = retry->find("max_retries"))
        policy.max_retries = static_cast<int>(v->as_int());
      if (const Value* v = retry->find("base_delay_ms")) policy.base_delay_ms = v->as_number();
      if (const Value* v = retry->find("multiplier")) policy.multiplier = v->as_number();
      if (const Value* v = retry->find("jitter")) policy.jitter_fraction = v->as_number();
      builder.set_retry_policy(policy);
    }
    if (const Value* async_cfg = stage.find("async")) {
      AsyncConfig cfg;
      if (async_cfg->kind() != ValueKind::map)
        raise(ErrorKind::invalid_config, "'async' must be an object");
      if (const Value* v = async_cfg->find("async_factor"))
        cfg.async_factor = static_cast<int>(v->as_int());
      if (const Value* v = async_cfg->find("worker_threads"))
        cfg.worker_threads = static_cast<int>(v->as_int());
      if (const Value* v = async_cfg->find("request_timeout_ms"))
        cfg.request_timeout_ms = static_cast<int>(v->as_int());
      builder.set_async_config(cfg);
    }
    out.stages.push_back(builder.build());
  }
  return out;
}

}  // namespace msvc
