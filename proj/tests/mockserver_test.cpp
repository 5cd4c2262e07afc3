#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "msvc/mockserver.hpp"

#include <httplib.h>

using namespace msvc;
using Catch::Approx;

// ---------------------------------------------------------------------------
// Independent re-implementations of the documented service rules. These are
// the expected values; the server must agree with them, not the other way
// around.

namespace oracle {

struct Word {
  std::string text;
  std::size_t offset;
};

std::vector<Word> split_words(std::string_view text) {
  auto is_word = [](unsigned char c) {
    return std::isalnum(c) != 0 ? c < 0x80 : c >= 0x80;  // ASCII alnum or any non-ASCII byte
  };
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    while (i < text.size() && is_word(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back(Word{std::string(text.substr(start, i - start)), start});
  }
  return out;
}

std::string lower(std::string w) {
  for (char& c : w)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return w;
}

std::string sentiment_label(std::string_view text) {
  static const std::vector<std::string> pos = {"good", "great", "excellent", "love", "wonderful"};
  static const std::vector<std::string> neg = {"bad", "terrible", "hate", "awful", "poor"};
  int p = 0, n = 0;
  for (const Word& w : split_words(text)) {
    std::string lw = lower(w.text);
    for (const std::string& x : pos)
      if (x == lw) ++p;
    for (const std::string& x : neg)
      if (x == lw) ++n;
  }
  if (p > n) return "positive";
  if (n > p) return "negative";
  return "neutral";
}

std::vector<std::uint32_t> decode_utf8(std::string_view s) {
  std::vector<std::uint32_t> cps;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::uint32_t cp;
    int extra;
    if (c < 0x80) {
      cp = c;
      extra = 0;
    } else if (c >= 0xF0) {
      cp = c & 0x07u;
      extra = 3;
    } else if (c >= 0xE0) {
      cp = c & 0x0Fu;
      extra = 2;
    } else if (c >= 0xC0) {
      cp = c & 0x1Fu;
      extra = 1;
    } else {
      cp = 0xFFFD;
      extra = 0;
    }
    for (int k = 0; k < extra && i + 1 < s.size(); ++k) {
      ++i;
      cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3Fu);
    }
    cps.push_back(cp);
    ++i;
  }
  return cps;
}

std::string language(std::string_view text) {
  bool hangul = false, kana = false, han = false, cyr = false;
  for (std::uint32_t cp : decode_utf8(text)) {
    hangul |= (cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0x1100 && cp <= 0x11FF) ||
              (cp >= 0x3130 && cp <= 0x318F);
    kana |= (cp >= 0x3040 && cp <= 0x309F) || (cp >= 0x30A0 && cp <= 0x30FF);
    han |= cp >= 0x4E00 && cp <= 0x9FFF;
    cyr |= cp >= 0x0400 && cp <= 0x04FF;
  }
  if (hangul) return "ko";
  if (kana) return "ja";
  if (han) return "zh";
  if (cyr) return "ru";
  return "en";
}

// Codepoints = bytes that are not UTF-8 continuation bytes.
std::size_t codepoint_count(std::string_view w) {
  std::size_t n = 0;
  for (unsigned char c : std::string(w))
    if ((c & 0xC0u) != 0x80u) ++n;
  return n;
}

std::vector<std::string> key_phrases(std::string_view text) {
  std::vector<std::string> out;
  for (const Word& w : split_words(text)) {
    std::string lw = lower(w.text);
    if (codepoint_count(lw) < 5) continue;
    bool seen = false;
    for (const std::string& prev : out) seen |= prev == lw;
    if (seen) continue;
    out.push_back(lw);
    if (out.size() == 5) break;
  }
  return out;
}

struct Entity {
  std::string text;
  std::size_t offset;
  std::size_t length;
};

std::vector<Entity> entities(std::string_view text) {
  std::vector<Word> words = split_words(text);
  std::vector<Entity> out;
  std::size_t i = 0;
  while (i < words.size()) {
    if (words[i].text[0] < 'A' || words[i].text[0] > 'Z') {
      ++i;
      continue;
    }
    std::size_t last = i;
    while (last + 1 < words.size() && words[last + 1].text[0] >= 'A' &&
           words[last + 1].text[0] <= 'Z' &&
           words[last + 1].offset == words[last].offset + words[last].text.size() + 1 &&
           text.substr(words[last].offset + words[last].text.size(), 1) == " ")
      ++last;
    std::size_t end = words[last].offset + words[last].text.size();
    out.push_back(Entity{std::string(text.substr(words[i].offset, end - words[i].offset)),
                         words[i].offset, end - words[i].offset});
    i = last + 1;
  }
  return out;
}

/// Brute-force z-score detector over the population standard deviation.
std::vector<bool> anomalies(const std::vector<double>& values) {
  std::vector<bool> out(values.size(), false);
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(values.size()));
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double z = std::abs(values[i] - mean) / sd;
    if (z >= 3.0 * (1.0 - 1e-9)) out[i] = true;  // boundary counts
  }
  return out;
}

}  // namespace oracle

// ---------------------------------------------------------------------------

namespace {

struct HttpReply {
  int status = 0;
  Value body;
};

HttpReply post_json(int port, const std::string& path, const std::string& body) {
  httplib::Client client("127.0.0.1", port);
  client.set_tcp_nodelay(true);
  client.set_read_timeout(std::chrono::seconds(30));
  httplib::Result res = client.Post(path, body, "application/json");
  REQUIRE(res);
  HttpReply reply;
  reply.status = res->status;
  if (!res->body.empty()) reply.body = value_from_json_text(res->body);
  return reply;
}

std::string docs_body(const std::vector<std::string>& texts) {
  Value::List docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Value::Map d;
    d.emplace("id", Value::text(std::to_string(i)));
    d.emplace("text", Value::text(texts[i]));
    docs.push_back(Value::map(std::move(d)));
  }
  Value::Map m;
  m.emplace("documents", Value::list(std::move(docs)));
  return value_to_json_text(Value::map(std::move(m)));
}

std::string series_body(const std::vector<double>& values) {
  Value::List series;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Value::Map p;
    p.emplace("timestamp", Value::text("2026-01-01T00:00:00Z"));
    p.emplace("value", Value::real(values[i]));
    series.push_back(Value::map(std::move(p)));
  }
  Value::Map m;
  m.emplace("series", Value::list(std::move(series)));
  m.emplace("granularity", Value::text("hourly"));
  return value_to_json_text(Value::map(std::move(m)));
}

std::string image_body(const std::string& raw) {
  Value::Map m;
  m.emplace("image", Value::text(base64_encode(raw)));
  return value_to_json_text(Value::map(std::move(m)));
}

const Value& only_document(const HttpReply& reply) {
  REQUIRE(reply.status == 200);
  const Value* docs = reply.body.find("documents");
  REQUIRE(docs != nullptr);
  REQUIRE(docs->as_list().size() == 1);
  return docs->as_list()[0];
}

std::string random_mixed_text(std::mt19937_64& rng) {
  static const char* const kPools[] = {
      "love",  "hate",    "great",  "awful",  "meeting", "Window", "Launch", "Excellent",
      "coffee", "project", "안녕하세요", "좋은데요", "こんにちは", "すごい", "你好世界", "天气不错",
      "привет", "хорошо", "abc",    "x9",     "wonderful", "terrible"};
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_int_distribution<int> pick(0, 21);
  std::uniform_int_distribution<int> sep(0, 9);
  int n = len(rng);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += sep(rng) == 0 ? ", " : " ";
    out += kPools[pick(rng)];
  }
  return out;
}

}  // namespace

TEST_CASE("health endpoint answers", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  httplib::Result res = client.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == R"({"status":"ok"})");
}

TEST_CASE("sentiment matches the lexicon rule with exact scores", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();

  HttpReply reply = post_json(server.port(), "/text/sentiment",
                              docs_body({"I love this great day"}));
  const Value& doc = only_document(reply);
  CHECK(doc.find("sentiment")->as_text() == "positive");
  const Value* scores = doc.find("confidenceScores");
  // two positive hits, zero negative: (2+1)/5, 1/5, (0+1)/5
  CHECK(scores->find("positive")->as_float() == Approx(0.6));
  CHECK(scores->find("neutral")->as_float() == Approx(0.2));
  CHECK(scores->find("negative")->as_float() == Approx(0.2));

  reply = post_json(server.port(), "/text/sentiment", docs_body({"this is terrible and awful"}));
  CHECK(only_document(reply).find("sentiment")->as_text() == "negative");

  reply = post_json(server.port(), "/text/sentiment", docs_body({"love and hate in balance"}));
  CHECK(only_document(reply).find("sentiment")->as_text() == "neutral");

  // Case-insensitive matching, and punctuation splits words.
  reply = post_json(server.port(), "/text/sentiment", docs_body({"LOVE,love.GREAT!"}));
  const Value& loud = only_document(reply);
  CHECK(loud.find("sentiment")->as_text() == "positive");
  CHECK(loud.find("confidenceScores")->find("positive")->as_float() == Approx(4.0 / 6.0));
}

TEST_CASE("language detection follows the script priority", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  auto detect = [&](const std::string& text) {
    HttpReply reply = post_json(server.port(), "/text/language", docs_body({text}));
    const Value& doc = only_document(reply);
    CHECK(doc.find("detectedLanguage")->find("confidenceScore")->as_float() == 1.0);
    return doc.find("detectedLanguage")->find("iso6391Name")->as_text();
  };

  CHECK(detect("안녕하세요") == "ko");
  CHECK(detect("こんにちは") == "ja");
  CHECK(detect("你好") == "zh");
  CHECK(detect("привет мир") == "ru");
  CHECK(detect("hello world") == "en");
  CHECK(detect("") == "en");
  CHECK(detect("12345 !?") == "en");
  // Priority: Japanese text mixing kana and Han must resolve to ja, and a
  // Hangul presence beats both.
  CHECK(detect("日本語のテキスト") == "ja");
  CHECK(detect("한국 漢字 text") == "ko");
  CHECK(detect("mostly english with один word") == "ru");
}

TEST_CASE("key phrases keep order, dedupe and cap at five", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  auto phrases = [&](const std::string& text) {
    HttpReply reply = post_json(server.port(), "/text/keyPhrases", docs_body({text}));
    std::vector<std::string> out;
    for (const Value& p : only_document(reply).find("keyPhrases")->as_list())
      out.push_back(p.as_text());
    return out;
  };

  CHECK(phrases("Hello wonderful world hello WONDERFUL again") ==
        std::vector<std::string>{"hello", "wonderful", "world", "again"});
  CHECK(phrases("a bb ccc dddd") == std::vector<std::string>{});  // all under five codepoints
  CHECK(phrases("alpha1 bravo2 charlie delta3 echo45 foxtrot golfing") ==
        std::vector<std::string>{"alpha1", "bravo2", "charlie", "delta3", "echo45"});
  // Five *codepoints*, not bytes: 안녕하세요 is five codepoints of three bytes each.
  CHECK(phrases("안녕하세요") == std::vector<std::string>{"안녕하세요"});
  CHECK(phrases("안녕 reader") == std::vector<std::string>{"reader"});
}

TEST_CASE("entities are capitalized runs with byte-accurate spans", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  std::string text = "Alice Smith met bob and Carol Jones Lee";
  HttpReply reply = post_json(server.port(), "/text/entities", docs_body({text}));
  const Value* entities = only_document(reply).find("entities");
  REQUIRE(entities->as_list().size() == 2);

  const Value& first = entities->as_list()[0];
  CHECK(first.find("text")->as_text() == "Alice Smith");
  CHECK(first.find("category")->as_text() == "Person");
  CHECK(first.find("offset")->as_int() == 0);
  CHECK(first.find("length")->as_int() == 11);

  const Value& second = entities->as_list()[1];
  CHECK(second.find("text")->as_text() == "Carol Jones Lee");
  CHECK(second.find("offset")->as_int() == 24);
  CHECK(second.find("length")->as_int() == 15);

  // A comma breaks the run even when both words are capitalized.
  reply = post_json(server.port(), "/text/entities", docs_body({"Alice, Bob"}));
  const Value* split = only_document(reply).find("entities");
  REQUIRE(split->as_list().size() == 2);
  CHECK(split->as_list()[0].find("text")->as_text() == "Alice");
  CHECK(split->as_list()[1].find("text")->as_text() == "Bob");

  reply = post_json(server.port(), "/text/entities", docs_body({"no names here"}));
  CHECK(only_document(reply).find("entities")->as_list().empty());
}

TEST_CASE("ocr reads back the text embedded in the image", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  HttpReply reply =
      post_json(server.port(), "/vision/ocr", image_body(R"({"text":"scanned page 7"})"));
  REQUIRE(reply.status == 200);
  CHECK(reply.body.find("text")->as_text() == "scanned page 7");

  CHECK(post_json(server.port(), "/vision/ocr", R"({"image":"!!!not-base64"})").status == 400);
  CHECK(post_json(server.port(), "/vision/ocr", image_body("just plain bytes")).status == 400);
  CHECK(post_json(server.port(), "/vision/ocr", R"({"nope":1})").status == 400);
}

TEST_CASE("image tags are deterministic picks from the fixed vocabulary", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  auto tags_of = [&](const std::string& raw) {
    HttpReply reply = post_json(server.port(), "/vision/tag", image_body(raw));
    REQUIRE(reply.status == 200);
    return *reply.body.find("tags");
  };

  Value first = tags_of("image bytes one");
  REQUIRE(first.as_list().size() == 3);
  const auto& vocab = mock_semantics::tag_vocabulary();
  for (const Value& tag : first.as_list()) {
    bool known = false;
    for (std::string_view w : vocab) known |= tag.find("name")->as_text() == w;
    CHECK(known);
    double conf = tag.find("confidence")->as_float();
    CHECK(conf >= 0.5);
    CHECK(conf < 1.0);
  }

  // Same bytes, same tags — and this holds across server instances and seeds
  // because the pick depends only on the image content.
  CHECK(tags_of("image bytes one") == first);
  ServerConfig other_seed;
  other_seed.seed = 999;
  MockServer second{other_seed};
  second.start();
  HttpReply other = post_json(second.port(), "/vision/tag", image_body("image bytes one"));
  CHECK(*other.body.find("tags") == first);

  // The documented indexing: vocabulary[(hash >> 8*i) & 15] for i = 0,1,2.
  std::string raw = "image bytes one";
  std::uint64_t h = fnv1a64(std::string_view(raw));
  for (int i = 0; i < 3; ++i)
    CHECK(first.as_list()[i].find("name")->as_text() == vocab[(h >> (8 * i)) & 15u]);
}

TEST_CASE("anomaly detection applies the inclusive three-sigma rule", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();

  // One outlier among nine equal points sits exactly on the boundary.
  std::vector<double> series = {1, 1, 1, 1, 100, 1, 1, 1, 1, 1};
  HttpReply reply = post_json(server.port(), "/anomaly/detect", series_body(series));
  REQUIRE(reply.status == 200);
  const Value* flags = reply.body.find("isAnomaly");
  REQUIRE(flags->as_list().size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(flags->as_list()[i].as_bool() == (i == 4));
  double mean = 10.9;  // (9*1 + 100) / 10
  for (const Value& e : reply.body.find("expectedValues")->as_list())
    CHECK(e.as_float() == Approx(mean));

  // A flat series has zero deviation and no anomalies.
  reply = post_json(server.port(), "/anomaly/detect", series_body({5, 5, 5, 5}));
  for (const Value& f : reply.body.find("isAnomaly")->as_list()) CHECK_FALSE(f.as_bool());

  CHECK(post_json(server.port(), "/anomaly/detect", series_body({})).status == 400);
  CHECK(post_json(server.port(), "/anomaly/detect",
                  R"({"series":[{"timestamp":"t","value":"NaN"}]})")
            .status == 400);
  CHECK(post_json(server.port(), "/anomaly/detect", R"({"granularity":"hourly"})").status == 400);
}

TEST_CASE("random inputs agree with the oracles across services", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  std::mt19937_64 rng(20260823);

  for (int trial = 0; trial < 150; ++trial) {
    std::string text = random_mixed_text(rng);
    CAPTURE(text);

    HttpReply reply = post_json(server.port(), "/text/sentiment", docs_body({text}));
    CHECK(only_document(reply).find("sentiment")->as_text() == oracle::sentiment_label(text));

    reply = post_json(server.port(), "/text/language", docs_body({text}));
    CHECK(only_document(reply).find("detectedLanguage")->find("iso6391Name")->as_text() ==
          oracle::language(text));

    reply = post_json(server.port(), "/text/keyPhrases", docs_body({text}));
    std::vector<std::string> got;
    for (const Value& p : only_document(reply).find("keyPhrases")->as_list())
      got.push_back(p.as_text());
    CHECK(got == oracle::key_phrases(text));

    reply = post_json(server.port(), "/text/entities", docs_body({text}));
    std::vector<oracle::Entity> expected = oracle::entities(text);
    const Value::List& spans = only_document(reply).find("entities")->as_list();
    REQUIRE(spans.size() == expected.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
      CHECK(spans[i].find("text")->as_text() == expected[i].text);
      CHECK(spans[i].find("offset")->as_int() == static_cast<std::int64_t>(expected[i].offset));
      CHECK(spans[i].find("length")->as_int() == static_cast<std::int64_t>(expected[i].length));
    }
  }

  std::normal_distribution<double> noise(10.0, 3.0);
  std::uniform_int_distribution<int> len(5, 30);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> series;
    int n = len(rng);
    for (int i = 0; i < n; ++i) series.push_back(noise(rng));
    if (trial % 3 == 0) series[static_cast<std::size_t>(rng() % n)] += 40.0;
    CAPTURE(trial, n);

    HttpReply reply = post_json(server.port(), "/anomaly/detect", series_body(series));
    REQUIRE(reply.status == 200);
    std::vector<bool> expected = oracle::anomalies(series);
    const Value::List& flags = reply.body.find("isAnomaly")->as_list();
    REQUIRE(flags.size() == expected.size());
    for (std::size_t i = 0; i < flags.size(); ++i) CHECK(flags[i].as_bool() == expected[i]);
  }
}

TEST_CASE("batched documents answer individually and errors are per-document", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();

  HttpReply reply = post_json(server.port(), "/text/sentiment",
                              docs_body({"love it", "hate it", "neither"}));
  REQUIRE(reply.status == 200);
  const Value::List& docs = reply.body.find("documents")->as_list();
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].find("sentiment")->as_text() == "positive");
  CHECK(docs[1].find("sentiment")->as_text() == "negative");
  CHECK(docs[2].find("sentiment")->as_text() == "neutral");

  // A document without text goes to the errors array; the rest still answer.
  std::string mixed = R"({"documents":[{"id":"0","text":"love"},{"id":"1"}]})";
  reply = post_json(server.port(), "/text/sentiment", mixed);
  REQUIRE(reply.status == 200);
  CHECK(reply.body.find("documents")->as_list().size() == 1);
  const Value::List& errors = reply.body.find("errors")->as_list();
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("id")->as_text() == "1");

  // Malformed envelopes and oversized batches are whole-request errors.
  CHECK(post_json(server.port(), "/text/sentiment", "{not json").status == 400);
  CHECK(post_json(server.port(), "/text/sentiment", R"({"rows":[]})").status == 400);
  CHECK(post_json(server.port(), "/text/sentiment", R"({"documents":[{"text":"no id"}]})").status ==
        400);
  CHECK(post_json(server.port(), "/text/sentiment", docs_body(std::vector<std::string>(11, "x")))
            .status == 413);
}

TEST_CASE("token bucket admits bursts up to capacity then refills", "[mock]") {
  RateLimitConfig cfg;
  cfg.capacity = 5;
  cfg.refill_per_sec = 10.0;

  TokenBucket bucket{static_cast<double>(cfg.capacity), 0.0};
  int admitted_at_once = 0;
  for (int i = 0; i < 6; ++i)
    if (rate_limiter_admit(bucket, 0.0, cfg)) ++admitted_at_once;
  CHECK(admitted_at_once == 5);

  // After a second it can serve again.
  CHECK(rate_limiter_admit(bucket, 1.0, cfg));
}

TEST_CASE("offered load below the refill rate is never rejected", "[mock]") {
  RateLimitConfig cfg;
  cfg.capacity = 5;
  cfg.refill_per_sec = 10.0;
  TokenBucket bucket{static_cast<double>(cfg.capacity), 0.0};

  int rejected = 0;
  for (int i = 0; i < 8 * 30; ++i) {
    double now = static_cast<double>(i) / 8.0;  // 8 requests per second for 30s
    if (!rate_limiter_admit(bucket, now, cfg)) ++rejected;
  }
  CHECK(rejected == 0);
}

TEST_CASE("sustained overload converges to the refill rate", "[mock]") {
  RateLimitConfig cfg;
  cfg.capacity = 5;
  cfg.refill_per_sec = 10.0;
  TokenBucket bucket{static_cast<double>(cfg.capacity), 0.0};

  int admitted = 0;
  const int offered_per_sec = 20;
  const int seconds = 30;
  for (int i = 0; i < offered_per_sec * seconds; ++i) {
    double now = static_cast<double>(i) / offered_per_sec;
    if (rate_limiter_admit(bucket, now, cfg)) ++admitted;
  }
  double rate = static_cast<double>(admitted) / seconds;
  CHECK(rate >= 9.0);   // refill rate -10%
  CHECK(rate <= 11.0);  // +10% (initial burst amortized over 30s)
}

TEST_CASE("rate-limited requests get a 429 with Retry-After", "[mock]") {
  ServerConfig cfg;
  cfg.rate_limit = RateLimitConfig{2, 0.1, 3};
  MockServer server{cfg};
  server.start();

  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  std::string body = docs_body({"x"});
  int ok = 0, limited = 0;
  std::string retry_after;
  for (int i = 0; i < 3; ++i) {
    httplib::Result res = client.Post("/text/sentiment", body, "application/json");
    REQUIRE(res);
    if (res->status == 429) {
      ++limited;
      retry_after = res->get_header_value("Retry-After");
    } else if (res->status == 200) {
      ++ok;
    }
  }
  CHECK(ok == 2);
  CHECK(limited == 1);
  CHECK(retry_after == "3");

  auto log = server.log_snapshot();
  REQUIRE(log.size() == 3);
  CHECK(log[2].decision == "rate_limited");
  CHECK(log[2].status == 429);
}

TEST_CASE("rate limiting is decided before fault injection", "[mock]") {
  ServerConfig cfg;
  cfg.rate_limit = RateLimitConfig{1, 0.001, 1};
  cfg.fail_prob = 0.99;
  cfg.seed = 3;
  MockServer server{cfg};
  server.start();

  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  std::string body = docs_body({"x"});
  client.Post("/text/sentiment", body, "application/json");
  client.Post("/text/sentiment", body, "application/json");

  auto log = server.log_snapshot();
  REQUIRE(log.size() == 2);
  CHECK((log[0].decision == "injected_failure" || log[0].decision == "served"));
  CHECK(log[1].decision == "rate_limited");  // bucket empty: no fail draw happens
}

TEST_CASE("injected failures are deterministic in the request sequence", "[mock]") {
  auto run_sequence = [](std::uint64_t seed) {
    ServerConfig cfg;
    cfg.fail_prob = 0.4;
    cfg.seed = seed;
    MockServer server{cfg};
    server.start();
    httplib::Client client("127.0.0.1", server.port());
    client.set_tcp_nodelay(true);
    std::string body = docs_body({"x"});
    std::vector<int> statuses;
    for (int i = 0; i < 20; ++i) {
      httplib::Result res = client.Post("/text/sentiment", body, "application/json");
      REQUIRE(res);
      statuses.push_back(res->status);
    }
    return statuses;
  };

  std::vector<int> a = run_sequence(5);
  std::vector<int> b = run_sequence(5);
  CHECK(a == b);

  int failures = 0;
  for (int s : a)
    if (s == 500) ++failures;
  CHECK(failures > 0);
  CHECK(failures < 20);

  // A different seed draws a different pattern (overwhelmingly likely).
  CHECK(run_sequence(977) != a);
}

TEST_CASE("latency draws replay identically for the same seed", "[mock]") {
  auto run_sequence = [](std::uint64_t seed) {
    ServerConfig cfg;
    cfg.latency = LatencyModel{LatencyModel::Kind::exponential, 10.0};
    cfg.seed = seed;
    MockServer server{cfg};
    server.start();
    httplib::Client client("127.0.0.1", server.port());
    client.set_tcp_nodelay(true);
    std::string body = docs_body({"x"});
    for (int i = 0; i < 12; ++i) client.Post("/text/sentiment", body, "application/json");
    std::vector<double> latencies;
    for (const auto& e : server.log_snapshot()) latencies.push_back(e.service_latency_ms);
    return latencies;
  };

  std::vector<double> a = run_sequence(21);
  CHECK(a == run_sequence(21));
  REQUIRE(a.size() == 12);

  // Exponential draws with mean 10: positive, varied, sane sample mean.
  double sum = 0.0;
  bool varied = false;
  for (double l : a) {
    CHECK(l >= 0.0);
    sum += l;
    varied |= std::abs(l - a[0]) > 1e-9;
  }
  CHECK(varied);
  CHECK(sum / 12.0 > 2.0);
  CHECK(sum / 12.0 < 40.0);
}

TEST_CASE("constant latency is honestly realized on the wire", "[mock]") {
  ServerConfig cfg;
  cfg.latency = LatencyModel{LatencyModel::Kind::constant, 30.0};
  MockServer server{cfg};
  server.start();

  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  client.set_keep_alive(true);
  std::string body = docs_body({"x"});
  client.Post("/text/sentiment", body, "application/json");  // connection warm-up

  std::vector<double> elapsed;
  for (int i = 0; i < 5; ++i) {
    auto start = std::chrono::steady_clock::now();
    httplib::Result res = client.Post("/text/sentiment", body, "application/json");
    REQUIRE(res);
    elapsed.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  for (double ms : elapsed) {
    CHECK(ms >= 30.0);
    CHECK(ms < 60.0);
  }
  CHECK(median(elapsed) < 45.0);

  // Rate-limited responses skip the service latency: they come back fast.
  ServerConfig limited_cfg;
  limited_cfg.latency = LatencyModel{LatencyModel::Kind::constant, 200.0};
  limited_cfg.rate_limit = RateLimitConfig{1, 0.001, 1};
  MockServer limited{limited_cfg};
  limited.start();
  httplib::Client client2("127.0.0.1", limited.port());
  client2.set_tcp_nodelay(true);
  client2.Post("/text/sentiment", body, "application/json");  // drains the bucket (slow)
  auto start = std::chrono::steady_clock::now();
  httplib::Result res = client2.Post("/text/sentiment", body, "application/json");
  double quick_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(res);
  CHECK(res->status == 429);
  CHECK(quick_ms < 100.0);
}

TEST_CASE("the request log records arrivals in sequence order", "[mock]") {
  MockServer server{ServerConfig{}};
  server.start();
  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  for (int i = 0; i < 5; ++i)
    client.Post("/text/sentiment", docs_body({"req " + std::to_string(i)}), "application/json");

  std::vector<RequestLogEntry> log = fetch_mock_log(server.base_url());
  REQUIRE(log.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(log[i].seq == i);
    CHECK(log[i].path == "/text/sentiment");
    CHECK(log[i].decision == "served");
    CHECK(log[i].status == 200);
    CHECK(log[i].body.find("req " + std::to_string(i)) != std::string::npos);
    if (i > 0) CHECK(log[i].arrival_ms >= log[i - 1].arrival_ms);
  }
}

TEST_CASE("reset clears the log and restarts the randomness sequence", "[mock]") {
  ServerConfig cfg;
  cfg.latency = LatencyModel{LatencyModel::Kind::exponential, 5.0};
  cfg.seed = 31;
  MockServer server{cfg};
  server.start();

  httplib::Client client("127.0.0.1", server.port());
  client.set_tcp_nodelay(true);
  std::string body = docs_body({"x"});
  client.Post("/text/sentiment", body, "application/json");
  double first_latency = server.log_snapshot().at(0).service_latency_ms;

  client.Post("/text/sentiment", body, "application/json");
  CHECK(server.log_snapshot().size() == 2);

  reset_mock(server.base_url());
  CHECK(server.log_snapshot().empty());

  // seq starts over, so the first post-reset draw equals the original one.
  client.Post("/text/sentiment", body, "application/json");
  auto log = server.log_snapshot();
  REQUIRE(log.size() == 1);
  CHECK(log[0].seq == 0);
  CHECK(log[0].service_latency_ms == first_latency);
}

TEST_CASE("binding a busy port raises instead of hanging", "[mock]") {
  MockServer first{ServerConfig{}};
  first.start();

  ServerConfig clash;
  clash.port = first.port();
  MockServer second{clash};
  try {
    second.start();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::port_in_use);
  }
}

TEST_CASE("server config validation", "[mock]") {
  ServerConfig bad;
  bad.fail_prob = 1.0;
  CHECK_THROWS_AS(MockServer{bad}, Error);
  bad = ServerConfig{};
  bad.io_threads = 0;
  CHECK_THROWS_AS(MockServer{bad}, Error);
  bad = ServerConfig{};
  bad.rate_limit = RateLimitConfig{0, 10.0, 1};
  CHECK_THROWS_AS(MockServer{bad}, Error);
}
