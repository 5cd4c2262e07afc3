#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include "msvc/mockserver.hpp"

#include <CLI11.hpp>

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msvc-mock: deterministic local service fleet"};
  app.require_subcommand(1);

  CLI::App* serve = app.add_subcommand("serve", "start serving the service routes");
  int port = 8080;
  double latency_ms = 0.0;
  std::string latency_dist = "constant";
  int rate_limit = 0;
  double refill = 0.0;
  int retry_after = 1;
  double fail_prob = 0.0;
  std::uint64_t seed = 0;
  int threads = 64;
  serve->add_option("--port", port, "listen port (0 picks a free one)");
  serve->add_option("--latency-ms", latency_ms, "service latency per request");
  serve->add_option("--latency-dist", latency_dist, "constant or exponential (mean)")
      ->check(CLI::IsMember({"constant", "exponential"}));
  serve->add_option("--rate-limit", rate_limit, "token bucket capacity (0 disables)");
  serve->add_option("--refill", refill, "tokens per second (defaults to capacity)");
  serve->add_option("--retry-after", retry_after, "Retry-After seconds on 429");
  serve->add_option("--fail-prob", fail_prob, "probability of an injected 500");
  serve->add_option("--seed", seed, "seed for latency draws and fault injection");
  serve->add_option("--threads", threads, "connection worker threads");

  CLI11_PARSE(app, argc, argv);

  msvc::ServerConfig cfg;
  cfg.port = port;
  cfg.latency.kind = latency_dist == "exponential" ? msvc::LatencyModel::Kind::exponential
                                                   : msvc::LatencyModel::Kind::constant;
  cfg.latency.param_ms = latency_ms;
  if (rate_limit > 0)
    cfg.rate_limit =
        msvc::RateLimitConfig{rate_limit, refill > 0.0 ? refill : rate_limit, retry_after};
  cfg.fail_prob = fail_prob;
  cfg.seed = seed;
  cfg.io_threads = threads;

  msvc::MockServer server(cfg);
  try {
    server.start();
  } catch (const msvc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "listening on " << server.base_url() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  return 0;
}
