// Spins up the local mock fleet, enriches a small table with detected
// language and sentiment, and prints the result. Build and run:
//
//   cmake --build build --target enrich_demo && ./build/enrich_demo

#include <iostream>
#include <sstream>

#include "msvc/msvc.hpp"

using namespace msvc;

int main() {
  ServerConfig server_cfg;
  server_cfg.latency = LatencyModel{LatencyModel::Kind::exponential, 5.0};
  server_cfg.seed = 7;
  MockServer server{server_cfg};
  server.start();
  std::cout << "mock fleet listening on " << server.base_url() << "\n\n";

  std::istringstream feedback(R"({"user": "ana", "text": "the new release is excellent, great work"}
{"user": "보라", "text": "정말 좋아요 최고입니다"}
{"user": "chris", "text": "terrible experience, the app keeps crashing"}
{"user": "дима", "text": "обновление работает отлично"}
{"user": "emi", "text": "とても使いやすいです"}
{"user": "noah", "text": null}
)");
  Schema schema({Column{"user", ValueKind::text}, Column{"text", ValueKind::text}});
  DataTable reviews = load_jsonl(feedback, schema, 2);

  TransformerBuilder detect(ServiceKind::language_detect);
  detect.set_url(server.base_url())
      .set_output_column("lang")
      .set_batch_size(3)
      .set_param("text", bind_column("text"));

  TransformerBuilder sentiment(ServiceKind::sentiment);
  sentiment.set_url(server.base_url())
      .set_output_column("mood")
      .set_batch_size(3)
      .set_param("text", bind_column("text"))
      .set_param("language", bind_column("lang"));
  sentiment.set_async_config(AsyncConfig{4, 30000, 2});

  Pipeline pipeline;
  pipeline.stages.push_back(detect.build());
  pipeline.stages.push_back(sentiment.build());

  HttplibTransport transport{TransportOptions{}};
  BackpressureGate gate;
  JobMetrics metrics;
  TransformContext ctx;
  ctx.transport = &transport;
  ctx.gate = &gate;
  ctx.metrics = &metrics;

  DataTable enriched = pipeline_transform(reviews, pipeline, ctx);

  auto show = [](const Value& v) {
    if (v.is_null()) return std::string("—");
    if (is_failure_value(v)) return "error: " + v.find("error")->as_text();
    return v.kind() == ValueKind::text ? v.as_text() : value_to_json_text(v);
  };
  std::cout << "user      lang  mood\n";
  for (const Row& row : enriched.collect()) {
    std::printf("%-9s %-5s %s\n", show(row.values[0]).c_str(), show(row.values[2]).c_str(),
                show(row.values[3]).c_str());
  }

  MetricsSnapshot snap = metrics.snapshot();
  std::cout << "\n" << enriched.num_rows() << " rows enriched in "
            << server.log_snapshot().size() << " requests, peak in-flight "
            << snap.max_in_flight << ", " << snap.failures << " failures\n";
  return 0;
}
