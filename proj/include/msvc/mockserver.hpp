#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "msvc/errors.hpp"
#include "msvc/http_model.hpp"
#include "msvc/util.hpp"
#include "msvc/value.hpp"

// The default listen backlog (5) overflows when a job opens its whole
// connection fan-out at once; the kernel then falls back to SYN cookies and
// occasional cookie rejections reset freshly established connections. Defined
// wherever httplib is included so all translation units agree.
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
#include <httplib.h>

namespace msvc {

// ---------------------------------------------------------------------------
// Deterministic service semantics. Every rule is closed-form so client tests
// can check behavior against an independently written oracle.

namespace mock_semantics {

struct Token {
  std::string text;
  std::size_t offset;  // byte offset into the original string
};

/// Words are maximal runs of ASCII alphanumerics or non-ASCII bytes.
inline std::vector<Token> tokenize(std::string_view text) {
  auto is_word_byte = [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c >= 0x80;
  };
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back(Token{std::string(text.substr(start, i - start)), start});
  }
  return out;
}

struct SentimentResult {
  std::string label;
  double positive;
  double neutral;
  double negative;
};

/// Lexicon count with add-one smoothing over three classes.
inline SentimentResult sentiment(std::string_view text) {
  static const std::set<std::string_view> kPositive = {"good", "great", "excellent", "love",
                                                       "wonderful"};
  static const std::set<std::string_view> kNegative = {"bad", "terrible", "hate", "awful",
                                                       "poor"};
  int pos = 0;
  int neg = 0;
  for (const Token& t : tokenize(text)) {
    std::string w = ascii_lower(t.text);
    if (kPositive.count(w) > 0) ++pos;
    if (kNegative.count(w) > 0) ++neg;
  }
  SentimentResult r;
  r.label = pos > neg ? "positive" : (neg > pos ? "negative" : "neutral");
  double denom = pos + neg + 3;
  r.positive = (pos + 1) / denom;
  r.negative = (neg + 1) / denom;
  r.neutral = 1.0 / denom;
  return r;
}

/// Script presence, checked in priority order (Hangul before kana before Han
/// so mixed CJK text resolves the way the priority list says).
inline std::string detect_language(std::string_view text) {
  bool hangul = false, kana = false, han = false, cyrillic = false;
  for (std::uint32_t cp : utf8_codepoints(text)) {
    if ((cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0x1100 && cp <= 0x11FF) ||
        (cp >= 0x3130 && cp <= 0x318F))
      hangul = true;
    else if ((cp >= 0x3040 && cp <= 0x309F) || (cp >= 0x30A0 && cp <= 0x30FF))
      kana = true;
    else if (cp >= 0x4E00 && cp <= 0x9FFF)
      han = true;
    else if (cp >= 0x0400 && cp <= 0x04FF)
      cyrillic = true;
  }
  if (hangul) return "ko";
  if (kana) return "ja";
  if (han) return "zh";
  if (cyrillic) return "ru";
  return "en";
}

/// Distinct lowercased words of at least five codepoints, input order, at
/// most five of them.
inline std::vector<std::string> key_phrases(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const Token& t : tokenize(text)) {
    std::string w = ascii_lower(t.text);
    if (utf8_codepoints(w).size() < 5) continue;
    if (!seen.insert(w).second) continue;
    out.push_back(w);
    if (out.size() == 5) break;
  }
  return out;
}

struct EntitySpan {
  std::string text;
  std::size_t offset;  // bytes
  std::size_t length;  // bytes
};

/// Maximal runs of capitalized words joined by single spaces; every run is
/// reported as a "Person".
inline std::vector<EntitySpan> entities(std::string_view text) {
  std::vector<Token> tokens = tokenize(text);
  auto capitalized = [](const Token& t) {
    return !t.text.empty() && t.text[0] >= 'A' && t.text[0] <= 'Z';
  };
  std::vector<EntitySpan> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!capitalized(tokens[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < tokens.size() && capitalized(tokens[j + 1]) &&
           tokens[j + 1].offset == tokens[j].offset + tokens[j].text.size() + 1 &&
           text[tokens[j].offset + tokens[j].text.size()] == ' ')
      ++j;
    std::size_t start = tokens[i].offset;
    std::size_t end = tokens[j].offset + tokens[j].text.size();
    out.push_back(EntitySpan{std::string(text.substr(start, end - start)), start, end - start});
    i = j + 1;
  }
  return out;
}

inline const std::array<std::string_view, 16>& tag_vocabulary() {
  static const std::array<std::string_view, 16> words = {
      "outdoor", "indoor", "person", "animal",   "vehicle", "building", "food",     "plant",
      "water",   "sky",    "text",   "screen",   "art",     "night",    "daylight", "abstract"};
  return words;
}

struct ImageTag {
  std::string name;
  double confidence;
};

/// Three vocabulary entries picked by consecutive bytes of the image hash;
/// repeats are possible and intentional (the pick is pure hash indexing).
inline std::vector<ImageTag> tag_image(std::span<const std::uint8_t> image) {
  std::uint64_t h = fnv1a64(image);
  std::vector<ImageTag> out;
  for (int i = 0; i < 3; ++i) {
    std::size_t idx = (h >> (8 * i)) & 15u;
    double confidence = 0.5 + static_cast<double>((h >> (16 + 8 * i)) & 0xFFu) / 512.0;
    out.push_back(ImageTag{std::string(tag_vocabulary()[idx]), confidence});
  }
  return out;
}

struct AnomalyResult {
  std::vector<bool> is_anomaly;
  double mean;
};

/// Three-sigma rule with population stddev. The boundary is inclusive (with
/// a tiny relative epsilon): a lone outlier in an otherwise flat series of n
/// points lands at exactly 3*sigma when n = 10, and it must count.
inline AnomalyResult detect_anomalies(const std::vector<double>& values) {
  AnomalyResult r;
  r.is_anomaly.assign(values.size(), false);
  r.mean = 0.0;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  var /= static_cast<double>(values.size());
  double sd = std::sqrt(var);
  if (sd == 0.0) return r;  // flat series: nothing is anomalous
  double threshold = 3.0 * sd;
  double eps = 1e-9 * std::max(1.0, threshold);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::abs(values[i] - r.mean) >= threshold - eps) r.is_anomaly[i] = true;
  return r;
}

}  // namespace mock_semantics

// ---------------------------------------------------------------------------
// Token bucket

struct RateLimitConfig {
  int capacity = 50;
  double refill_per_sec = 50.0;
  int retry_after_secs = 1;
};

struct TokenBucket {
  double tokens = 0.0;
  double last_refill_secs = 0.0;
};

/// Pure admit step: refill by elapsed time (capped at capacity), then spend
/// one token if available.
inline bool rate_limiter_admit(TokenBucket& bucket, double now_secs,
                               const RateLimitConfig& cfg) {
  double elapsed = now_secs - bucket.last_refill_secs;
  if (elapsed > 0.0) {
    bucket.tokens = std::min(static_cast<double>(cfg.capacity),
                             bucket.tokens + elapsed * cfg.refill_per_sec);
    bucket.last_refill_secs = now_secs;
  }
  if (bucket.tokens >= 1.0) {
    bucket.tokens -= 1.0;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Pure request handling (no clock, no sockets): path + body -> status + body

namespace detail {

inline std::string error_body(std::string_view message) {
  Value::Map m;
  m.emplace("error", Value::text(std::string(message)));
  return value_to_json_text(Value::map(std::move(m)));
}

inline Value sentiment_document(const std::string& id, std::string_view text) {
  mock_semantics::SentimentResult r = mock_semantics::sentiment(text);
  Value::Map scores;
  scores.emplace("positive", Value::real(r.positive));
  scores.emplace("neutral", Value::real(r.neutral));
  scores.emplace("negative", Value::real(r.negative));
  Value::Map doc;
  doc.emplace("id", Value::text(id));
  doc.emplace("sentiment", Value::text(r.label));
  doc.emplace("confidenceScores", Value::map(std::move(scores)));
  return Value::map(std::move(doc));
}

inline Value language_document(const std::string& id, std::string_view text) {
  Value::Map detected;
  detected.emplace("iso6391Name", Value::text(mock_semantics::detect_language(text)));
  detected.emplace("confidenceScore", Value::real(1.0));
  Value::Map doc;
  doc.emplace("id", Value::text(id));
  doc.emplace("detectedLanguage", Value::map(std::move(detected)));
  return Value::map(std::move(doc));
}

inline Value key_phrase_document(const std::string& id, std::string_view text) {
  Value::List phrases;
  for (std::string& p : mock_semantics::key_phrases(text)) phrases.push_back(Value::text(std::move(p)));
  Value::Map doc;
  doc.emplace("id", Value::text(id));
  doc.emplace("keyPhrases", Value::list(std::move(phrases)));
  return Value::map(std::move(doc));
}

inline Value entity_document(const std::string& id, std::string_view text) {
  Value::List entities;
  for (const mock_semantics::EntitySpan& e : mock_semantics::entities(text)) {
    Value::Map span;
    span.emplace("text", Value::text(e.text));
    span.emplace("category", Value::text("Person"));
    span.emplace("offset", Value::integer(static_cast<std::int64_t>(e.offset)));
    span.emplace("length", Value::integer(static_cast<std::int64_t>(e.length)));
    entities.push_back(Value::map(std::move(span)));
  }
  Value::Map doc;
  doc.emplace("id", Value::text(id));
  doc.emplace("entities", Value::list(std::move(entities)));
  return Value::map(std::move(doc));
}

inline std::pair<int, std::string> text_route_response(std::string_view path,
                                                       const Value& parsed) {
  if (parsed.kind() != ValueKind::map) return {400, error_body("body must be an object")};
  const Value* documents = parsed.find("documents");
  if (documents == nullptr || documents->kind() != ValueKind::list)
    return {400, error_body("body needs a 'documents' array")};
  if (documents->as_list().size() > 10) return {413, error_body("batch too large")};

  Value::List out_docs;
  Value::List out_errors;
  for (const Value& doc : documents->as_list()) {
    if (doc.kind() != ValueKind::map) return {400, error_body("documents must be objects")};
    const Value* id = doc.find("id");
    if (id == nullptr || id->kind() != ValueKind::text)
      return {400, error_body("document without string id")};
    const Value* text = doc.find("text");
    if (text == nullptr || text->kind() != ValueKind::text) {
      Value::Map err;
      err.emplace("id", *id);
      err.emplace("error", Value::text("document missing text"));
      out_errors.push_back(Value::map(std::move(err)));
      continue;
    }
    if (path == "/text/sentiment")
      out_docs.push_back(sentiment_document(id->as_text(), text->as_text()));
    else if (path == "/text/language")
      out_docs.push_back(language_document(id->as_text(), text->as_text()));
    else if (path == "/text/keyPhrases")
      out_docs.push_back(key_phrase_document(id->as_text(), text->as_text()));
    else
      out_docs.push_back(entity_document(id->as_text(), text->as_text()));
  }
  Value::Map body;
  body.emplace("documents", Value::list(std::move(out_docs)));
  body.emplace("errors", Value::list(std::move(out_errors)));
  return {200, value_to_json_text(Value::map(std::move(body)))};
}

inline std::pair<int, std::string> vision_route_response(std::string_view path,
                                                         const Value& parsed) {
  if (parsed.kind() != ValueKind::map) return {400, error_body("body must be an object")};
  const Value* image = parsed.find("image");
  if (image == nullptr || image->kind() != ValueKind::text)
    return {400, error_body("body needs a base64 'image'")};
  std::vector<std::uint8_t> bytes;
  try {
    bytes = base64_decode(image->as_text());
  } catch (const Error&) {
    return {400, error_body("image is not valid base64")};
  }

  if (path == "/vision/ocr") {
    // The "scanned document" is JSON with an embedded text field; echo it.
    Value embedded;
    try {
      embedded = value_from_json_text(
          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const Error&) {
      return {400, error_body("image does not contain readable text")};
    }
    const Value* text =
        embedded.kind() == ValueKind::map ? embedded.find("text") : nullptr;
    if (text == nullptr || text->kind() != ValueKind::text)
      return {400, error_body("image does not contain readable text")};
    Value::Map body;
    body.emplace("text", *text);
    return {200, value_to_json_text(Value::map(std::move(body)))};
  }

  Value::List tags;
  for (const mock_semantics::ImageTag& t : mock_semantics::tag_image(bytes)) {
    Value::Map tag;
    tag.emplace("name", Value::text(t.name));
    tag.emplace("confidence", Value::real(t.confidence));
    tags.push_back(Value::map(std::move(tag)));
  }
  Value::Map body;
  body.emplace("tags", Value::list(std::move(tags)));
  return {200, value_to_json_text(Value::map(std::move(body)))};
}

inline std::pair<int, std::string> anomaly_route_response(const Value& parsed) {
  if (parsed.kind() != ValueKind::map) return {400, error_body("body must be an object")};
  const Value* series = parsed.find("series");
  if (series == nullptr || series->kind() != ValueKind::list)
    return {400, error_body("body needs a 'series' array")};
  if (series->as_list().empty()) return {400, error_body("series is empty")};
  std::vector<double> values;
  for (const Value& point : series->as_list()) {
    if (point.kind() != ValueKind::map) return {400, error_body("series points must be objects")};
    const Value* v = point.find("value");
    if (v == nullptr || !v->is_number())
      return {400, error_body("series points need a numeric value")};
    values.push_back(v->as_number());
  }
  mock_semantics::AnomalyResult r = mock_semantics::detect_anomalies(values);
  Value::List flags;
  Value::List expected;
  for (bool b : r.is_anomaly) {
    flags.push_back(Value::boolean(b));
    expected.push_back(Value::real(r.mean));
  }
  Value::Map body;
  body.emplace("isAnomaly", Value::list(std::move(flags)));
  body.emplace("expectedValues", Value::list(std::move(expected)));
  return {200, value_to_json_text(Value::map(std::move(body)))};
}

}  // namespace detail

/// Computes the semantic response for a service route, independent of
/// latency, faults and rate limiting.
inline std::pair<int, std::string> service_response(std::string_view path,
                                                    std::string_view body) {
  Value parsed;
  try {
    parsed = value_from_json_text(body);
  } catch (const Error&) {
    return {400, detail::error_body("malformed body")};
  }
  if (path.substr(0, 6) == "/text/") return detail::text_route_response(path, parsed);
  if (path.substr(0, 8) == "/vision/") return detail::vision_route_response(path, parsed);
  return detail::anomaly_route_response(parsed);
}

// ---------------------------------------------------------------------------
// The server

struct LatencyModel {
  enum class Kind { constant, exponential };
  Kind kind = Kind::constant;
  double param_ms = 0.0;  // constant value or exponential mean
};

struct ServerConfig {
  int port = 0;  // 0 picks a free port
  LatencyModel latency;
  std::map<std::string, LatencyModel> per_endpoint;  // path-specific overrides
  std::optional<RateLimitConfig> rate_limit;
  double fail_prob = 0.0;
  std::uint64_t seed = 0;
  int io_threads = 64;

  void validate() const {
    if (fail_prob < 0.0 || fail_prob >= 1.0)
      raise(ErrorKind::invalid_config, "fail_prob must be in [0,1)");
    if (io_threads < 1) raise(ErrorKind::invalid_config, "io_threads must be >= 1");
    if (rate_limit && (rate_limit->capacity < 1 || rate_limit->refill_per_sec <= 0.0))
      raise(ErrorKind::invalid_config, "rate limit needs capacity >= 1 and refill > 0");
  }
};

struct RequestLogEntry {
  std::uint64_t seq = 0;
  double arrival_ms = 0.0;
  std::string path;
  std::string body;
  std::string decision;  // served | rate_limited | injected_failure
  double service_latency_ms = 0.0;
  int status = 0;
};

inline const char* const kServicePaths[] = {
    "/text/sentiment", "/text/language", "/text/keyPhrases", "/text/entities",
    "/vision/ocr",     "/vision/tag",    "/anomaly/detect",
};

/// Local service fleet: all seven routes plus /health, /__log and /__reset.
/// Per-request randomness (latency draws, fault injection) is a pure function
/// of (seed, request sequence number), so a fixed request order replays
/// identically.
class MockServer {
 public:
  explicit MockServer(ServerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
  ~MockServer() { stop(); }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  void start() {
    server_.new_task_queue = [n = cfg_.io_threads]() { return new httplib::ThreadPool(n); };
    // Long-lived keep-alive connections; the default per-connection request cap
    // would force reconnects mid-benchmark.
    server_.set_keep_alive_max_count(1 << 20);
    server_.set_keep_alive_timeout(30);
    // Nagle + delayed ACKs add ~40ms per direction, swamping the configured
    // latency model on loopback.
    server_.set_tcp_nodelay(true);
    // Default options include SO_REUSEPORT, which would let two servers share
    // a port instead of failing fast; keep only TIME_WAIT reuse.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
                 sizeof(yes));
    });
    register_routes();
    started_ = std::chrono::steady_clock::now();
    if (cfg_.rate_limit)
      bucket_ = TokenBucket{static_cast<double>(cfg_.rate_limit->capacity), 0.0};

    if (cfg_.port == 0) {
      int bound = server_.bind_to_any_port("127.0.0.1");
      if (bound < 0) raise(ErrorKind::port_in_use, "could not bind any port");
      port_ = bound;
    } else {
      if (!server_.bind_to_port("127.0.0.1", cfg_.port))
        raise(ErrorKind::port_in_use, "port " + std::to_string(cfg_.port) + " unavailable");
      port_ = cfg_.port;
    }
    listen_thread_ = std::thread([this]() { server_.listen_after_bind(); });
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (!server_.is_running()) {
      if (std::chrono::steady_clock::now() > deadline)
        raise(ErrorKind::port_in_use, "server failed to start listening");
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }

  void stop() {
    if (listen_thread_.joinable()) {
      server_.stop();
      listen_thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<RequestLogEntry> log_snapshot() const {
    std::vector<RequestLogEntry> out;
    {
      std::lock_guard<std::mutex> lock(log_mutex_);
      out = log_;
    }
    std::sort(out.begin(), out.end(),
              [](const RequestLogEntry& a, const RequestLogEntry& b) { return a.seq < b.seq; });
    return out;
  }

  void reset() {
    std::lock_guard<std::mutex> log_lock(log_mutex_);
    std::lock_guard<std::mutex> bucket_lock(bucket_mutex_);
    log_.clear();
    seq_.store(0, std::memory_order_release);
    if (cfg_.rate_limit)
      bucket_ = TokenBucket{static_cast<double>(cfg_.rate_limit->capacity), elapsed_secs()};
  }

 private:
  double elapsed_secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  }

  double draw_latency(const std::string& path, std::uint64_t seq) const {
    LatencyModel model = cfg_.latency;
    if (auto it = cfg_.per_endpoint.find(path); it != cfg_.per_endpoint.end())
      model = it->second;
    if (model.param_ms <= 0.0) return 0.0;
    if (model.kind == LatencyModel::Kind::constant) return model.param_ms;
    double u = hash01(cfg_.seed, seq, fnv1a64("latency"));
    return -model.param_ms * std::log1p(-u);
  }

  void append_log(RequestLogEntry entry) {
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_.push_back(std::move(entry));
  }

  void handle_service(const std::string& path, const httplib::Request& req,
                      httplib::Response& res) {
    std::uint64_t seq = seq_.fetch_add(1, std::memory_order_acq_rel);
    RequestLogEntry entry;
    entry.seq = seq;
    entry.arrival_ms = elapsed_secs() * 1000.0;
    entry.path = path;
    entry.body = req.body;

    if (cfg_.rate_limit) {
      bool admitted;
      {
        std::lock_guard<std::mutex> lock(bucket_mutex_);
        admitted = rate_limiter_admit(bucket_, elapsed_secs(), *cfg_.rate_limit);
      }
      if (!admitted) {
        entry.decision = "rate_limited";
        entry.status = 429;
        res.status = 429;
        res.set_header("Retry-After", std::to_string(cfg_.rate_limit->retry_after_secs));
        res.set_content(detail::error_body("rate limited"), "application/json");
        append_log(std::move(entry));
        return;
      }
    }

    if (cfg_.fail_prob > 0.0 && hash01(cfg_.seed, seq, fnv1a64("fail")) < cfg_.fail_prob) {
      entry.decision = "injected_failure";
      entry.status = 500;
      res.status = 500;
      res.set_content(detail::error_body("injected failure"), "application/json");
      append_log(std::move(entry));
      return;
    }

    auto [status, body] = service_response(path, req.body);
    double latency_ms = draw_latency(path, seq);
    if (latency_ms > 0.0)
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(latency_ms));

    entry.decision = "served";
    entry.status = status;
    entry.service_latency_ms = latency_ms;
    res.status = status;
    res.set_content(body, "application/json");
    append_log(std::move(entry));
  }

  void register_routes() {
    for (const char* path : kServicePaths) {
      server_.Post(path, [this, path = std::string(path)](const httplib::Request& req,
                                                          httplib::Response& res) {
        handle_service(path, req, res);
      });
    }
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_.Get("/__log", [this](const httplib::Request&, httplib::Response& res) {
      Value::List entries;
      for (const RequestLogEntry& e : log_snapshot()) {
        Value::Map m;
        m.emplace("seq", Value::integer(static_cast<std::int64_t>(e.seq)));
        m.emplace("arrival_ms", Value::real(e.arrival_ms));
        m.emplace("path", Value::text(e.path));
        m.emplace("body", Value::text(e.body));
        m.emplace("decision", Value::text(e.decision));
        m.emplace("service_latency_ms", Value::real(e.service_latency_ms));
        m.emplace("status", Value::integer(e.status));
        entries.push_back(Value::map(std::move(m)));
      }
      Value::Map body;
      body.emplace("entries", Value::list(std::move(entries)));
      res.set_content(value_to_json_text(Value::map(std::move(body))), "application/json");
    });
    server_.Post("/__reset", [this](const httplib::Request&, httplib::Response& res) {
      reset();
      res.set_content(R"({"status":"reset"})", "application/json");
    });
  }

  ServerConfig cfg_;
  httplib::Server server_;
  std::thread listen_thread_;
  int port_ = 0;
  std::chrono::steady_clock::time_point started_;
  std::atomic<std::uint64_t> seq_{0};
  mutable std::mutex log_mutex_;
  std::vector<RequestLogEntry> log_;
  std::mutex bucket_mutex_;
  TokenBucket bucket_;
};

// ---------------------------------------------------------------------------
// Client-side helpers for the oracle surface

inline std::vector<RequestLogEntry> fetch_mock_log(const std::string& base_url) {
  UrlParts url = parse_url(base_url);
  httplib::Client client(url.host, url.port);
  client.set_tcp_nodelay(true);
  client.set_read_timeout(std::chrono::seconds(30));
  httplib::Result res = client.Get("/__log");
  if (!res || res->status != 200)
    raise(ErrorKind::transport_error, "could not fetch " + base_url + "/__log");
  Value parsed = value_from_json_text(res->body);
  std::vector<RequestLogEntry> out;
  for (const Value& e : parsed.find("entries")->as_list()) {
    RequestLogEntry entry;
    entry.seq = static_cast<std::uint64_t>(e.find("seq")->as_int());
    entry.arrival_ms = e.find("arrival_ms")->as_number();
    entry.path = e.find("path")->as_text();
    entry.body = e.find("body")->as_text();
    entry.decision = e.find("decision")->as_text();
    entry.service_latency_ms = e.find("service_latency_ms")->as_number();
    entry.status = static_cast<int>(e.find("status")->as_int());
    out.push_back(std::move(entry));
  }
  return out;
}

inline void reset_mock(const std::string& base_url) {
  UrlParts url = parse_url(base_url);
  httplib::Client client(url.host, url.port);
  client.set_tcp_nodelay(true);
  httplib::Result res = client.Post("/__reset", "", "application/json");
  if (!res || res->status != 200)
    raise(ErrorKind::transport_error, "could not reset mock at " + base_url);
}

}  // namespace msvc
