#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include "msvc/clock.hpp"
#include "msvc/errors.hpp"
#include "msvc/http_model.hpp"
#include "msvc/transport.hpp"

namespace msvc {

struct RetryPolicy {
  int max_retries = 5;
  double base_delay_ms = 100.0;
  double multiplier = 2.0;
  double jitter_fraction = 0.2;
  std::set<int> retryable_statuses = {408, 429, 500, 502, 503, 504};
  bool retry_on_transport_error = true;

  void validate() const {
    if (max_retries < 0) raise(ErrorKind::invalid_config, "max_retries must be >= 0");
    if (!(base_delay_ms > 0.0)) raise(ErrorKind::invalid_config, "base_delay must be > 0");
    if (multiplier < 1.0) raise(ErrorKind::invalid_config, "multiplier must be >= 1");
    if (jitter_fraction < 0.0 || jitter_fraction >= 1.0)
      raise(ErrorKind::invalid_config, "jitter_fraction must be in [0,1)");
  }
};

/// delay = base * multiplier^attempt * (1 + u), u uniform in [-jitter, +jitter].
inline std::chrono::duration<double, std::milli> next_delay(const RetryPolicy& p, int attempt,
                                                            std::mt19937_64& rng) {
  if (attempt > p.max_retries)
    raise(ErrorKind::attempts_exhausted,
          "attempt " + std::to_string(attempt) + " > max_retries " + std::to_string(p.max_retries));
  double scale = p.base_delay_ms * std::pow(p.multiplier, attempt);
  double u = 0.0;
  if (p.jitter_fraction > 0.0) {
    std::uniform_real_distribution<double> dist(-p.jitter_fraction, p.jitter_fraction);
    u = dist(rng);
  }
  return std::chrono::duration<double, std::milli>(scale * (1.0 + u));
}

// ---------------------------------------------------------------------------
// Response classification

struct Proceed {};
struct RetryAfter {
  std::chrono::milliseconds delay;
};
struct RetryBackoff {};
struct FailResponse {
  std::string reason;
};

using ResponseClass = std::variant<Proceed, RetryAfter, RetryBackoff, FailResponse>;

/// 2xx/3xx proceed; retryable statuses retry (honouring a delta-seconds
/// Retry-After header when present); everything else is a hard failure.
inline ResponseClass classify_response(const HttpResponseData& resp, const RetryPolicy& p) {
  int family = resp.status / 100;
  if (family == 2 || family == 3) return Proceed{};
  if (p.retryable_statuses.count(resp.status) > 0) {
    if (auto ra = get_header(resp, "Retry-After")) {
      const std::string& s = *ra;
      if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos &&
          s.size() <= 9) {
        long secs = std::stol(s);
        return RetryAfter{std::chrono::seconds(secs)};
      }
      // HTTP-date (or garbage) form: fall back to our own schedule.
      return RetryBackoff{};
    }
    return RetryBackoff{};
  }
  return FailResponse{"status " + std::to_string(resp.status)};
}

// ---------------------------------------------------------------------------
// Shared per-endpoint cooldown

/// Process-wide map endpoint -> cooldown deadline. While a deadline is in the
/// future no request for that endpoint may leave the client. Deadlines only
/// move forward (concurrent updates max-merge).
class BackpressureGate {
 public:
  void extend(const std::string& endpoint, Clock::time_point until) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = deadlines_.try_emplace(endpoint, until);
    if (!inserted && until > it->second) it->second = until;
  }

  std::optional<Clock::time_point> deadline(const std::string& endpoint) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = deadlines_.find(endpoint);
    if (it == deadlines_.end()) return std::nullopt;
    return it->second;
  }

  /// Blocks (on `clock`) until the endpoint's cooldown, if any, has expired.
  /// Re-checks after waking because another worker may have pushed the
  /// deadline further out in the meantime.
  void wait(const std::string& endpoint, Clock& clock) {
    for (;;) {
      std::optional<Clock::time_point> until = deadline(endpoint);
      if (!until || clock.now() >= *until) return;
      clock.sleep_until(*until);
    }
  }

 private:
  std::mutex mutex_;
  std::map<std::string, Clock::time_point> deadlines_;
};

// ---------------------------------------------------------------------------
// Policy-driven send

struct SendSuccess {
  HttpResponseData response;
  int attempts = 1;
};

struct SendFailure {
  ErrorKind kind = ErrorKind::attempts_exhausted;
  std::string message;
  int attempts = 0;
  std::optional<HttpResponseData> last_response;
};

using SendResult = std::variant<SendSuccess, SendFailure>;

/// Optional counters; callbacks may fire concurrently from many workers.
struct SendHooks {
  std::function<void(int status)> on_status;
  std::function<void()> on_transport_error;
  std::function<void()> on_retry;
};

/// Sends with the full reliability stack: waits out any endpoint cooldown,
/// classifies each response, feeds Retry-After deadlines back into the shared
/// gate, and backs off exponentially on retryable failures. Total attempts
/// never exceed max_retries + 1; gate waits do not consume attempts.
inline SendResult send_with_policy(const HttpRequestData& request, const RetryPolicy& policy,
                                   BackpressureGate& gate, Clock& clock, Transport& transport,
                                   std::mt19937_64& rng, const SendHooks& hooks = {}) {
  policy.validate();
  const std::string endpoint = parse_url(request.url).endpoint_key();
  const int max_attempts = policy.max_retries + 1;

  int attempts = 0;
  std::string last_error;
  std::optional<HttpResponseData> last_response;

  while (attempts < max_attempts) {
    gate.wait(endpoint, clock);
    TransportResult sent = transport.send(request);
    ++attempts;
    int backoff_attempt = attempts - 1;  // 0-based exponent for the schedule

    if (auto* err = std::get_if<TransportError>(&sent)) {
      if (hooks.on_transport_error) hooks.on_transport_error();
      last_error = "transport: " + err->message;
      last_response.reset();
      if (!policy.retry_on_transport_error)
        return SendFailure{ErrorKind::transport_error, last_error, attempts, std::nullopt};
      if (attempts >= max_attempts) break;
      if (hooks.on_retry) hooks.on_retry();
      clock.sleep_for(std::chrono::duration_cast<std::chrono::nanoseconds>(
          next_delay(policy, backoff_attempt, rng)));
      continue;
    }

    HttpResponseData response = std::get<HttpResponseData>(std::move(sent));
    if (hooks.on_status) hooks.on_status(response.status);
    ResponseClass cls = classify_response(response, policy);

    if (std::holds_alternative<Proceed>(cls)) return SendSuccess{std::move(response), attempts};

    if (auto* fail = std::get_if<FailResponse>(&cls)) {
      return SendFailure{ErrorKind::client_error, fail->reason, attempts, std::move(response)};
    }

    last_error = "status " + std::to_string(response.status);
    last_response = std::move(response);

    if (auto* ra = std::get_if<RetryAfter>(&cls)) {
      gate.extend(endpoint, clock.now() + ra->delay);
      if (attempts >= max_attempts) break;
      if (hooks.on_retry) hooks.on_retry();
      continue;  // the gate wait at the top of the loop realizes the delay
    }

    // RetryBackoff
    if (attempts >= max_attempts) break;
    if (hooks.on_retry) hooks.on_retry();
    clock.sleep_for(std::chrono::duration_cast<std::chrono::nanoseconds>(
        next_delay(policy, backoff_attempt, rng)));
  }

  return SendFailure{ErrorKind::attempts_exhausted, "gave up after " + std::to_string(attempts) +
                         " attempts; last: " + last_error,
                     attempts, std::move(last_response)};
}

}  // namespace msvc
