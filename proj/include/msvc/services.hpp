#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msvc/engine.hpp"
#include "msvc/errors.hpp"
#include "msvc/http_model.hpp"
#include "msvc/util.hpp"
#include "msvc/value.hpp"

namespace msvc {

enum class ServiceKind {
  sentiment,
  language_detect,
  key_phrase,
  named_entity,
  ocr,
  tag_image,
  anomaly_detect,
};

struct ServiceSpec {
  std::string_view name;     // CLI spelling
  std::string_view path;     // route under the base url
  int max_batch;             // 10 for text, 1 for image/series
  std::set<std::string, std::less<>> required_params;
  std::set<std::string, std::less<>> optional_params;
  bool documents_envelope;   // uses {"documents": [...], "errors": [...]}
  bool sends_language;       // documents carry a "language" field
};

inline const ServiceSpec& service_spec(ServiceKind kind) {
  static const ServiceSpec specs[] = {
      {"sentiment", "/text/sentiment", 10, {"text"}, {"language"}, true, true},
      {"language", "/text/language", 10, {"text"}, {}, true, false},
      {"keyPhrases", "/text/keyPhrases", 10, {"text"}, {"language"}, true, true},
      {"entities", "/text/entities", 10, {"text"}, {"language"}, true, true},
      {"ocr", "/vision/ocr", 1, {"image"}, {}, false, false},
      {"tag", "/vision/tag", 1, {"image"}, {}, false, false},
      {"anomaly", "/anomaly/detect", 1, {"series"}, {"granularity"}, false, false},
  };
  return specs[static_cast<int>(kind)];
}

inline std::optional<ServiceKind> service_kind_from_name(std::string_view name) {
  static const std::pair<std::string_view, ServiceKind> table[] = {
      {"sentiment", ServiceKind::sentiment},
      {"language", ServiceKind::language_detect},
      {"keyPhrases", ServiceKind::key_phrase},
      {"keyphrases", ServiceKind::key_phrase},
      {"entities", ServiceKind::named_entity},
      {"ocr", ServiceKind::ocr},
      {"tag", ServiceKind::tag_image},
      {"anomaly", ServiceKind::anomaly_detect},
  };
  for (const auto& [n, k] : table)
    if (n == name) return k;
  return std::nullopt;
}

using ResolvedParams = std::map<std::string, Value>;

namespace detail {

inline const Value& require_param(const ResolvedParams& params, const std::string& name,
                                  ServiceKind kind) {
  auto it = params.find(name);
  if (it == params.end())
    raise(ErrorKind::missing_required_parameter,
          std::string(service_spec(kind).name) + " needs '" + name + "'");
  return it->second;
}

inline std::string text_param(const ResolvedParams& params, const std::string& name,
                              ServiceKind kind) {
  const Value& v = require_param(params, name, kind);
  if (v.kind() != ValueKind::text)
    raise(ErrorKind::schema_violation, "'" + name + "' must be text");
  return v.as_text();
}

inline std::string image_param(const ResolvedParams& params, ServiceKind kind) {
  const Value& v = require_param(params, "image", kind);
  if (v.kind() == ValueKind::bytes) return base64_encode(v.as_bytes());
  if (v.kind() == ValueKind::text) return v.as_text();  // already base64
  raise(ErrorKind::schema_violation, "'image' must be bytes or base64 text");
}

inline void check_params_known(const ResolvedParams& params, const ServiceSpec& spec) {
  for (const auto& [name, value] : params) {
    if (spec.required_params.count(name) == 0 && spec.optional_params.count(name) == 0)
      raise(ErrorKind::unknown_parameter,
            std::string(spec.name) + " does not accept '" + name + "'");
  }
}

}  // namespace detail

/// One POST per batch. Text services wrap rows in the documents envelope with
/// ids "0".."n-1"; image and anomaly services take a single row's params.
inline HttpRequestData build_service_request(ServiceKind kind,
                                             const std::vector<ResolvedParams>& batch,
                                             const std::string& base_url,
                                             const std::optional<std::string>& api_key) {
  const ServiceSpec& spec = service_spec(kind);
  if (batch.empty()) raise(ErrorKind::invalid_config, "empty batch");
  if (static_cast<int>(batch.size()) > spec.max_batch)
    raise(ErrorKind::batch_too_large, std::string(spec.name) + " allows at most " +
                                          std::to_string(spec.max_batch) + " per request");
  for (const ResolvedParams& params : batch) detail::check_params_known(params, spec);

  Value::Map body;
  if (spec.documents_envelope) {
    Value::List documents;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const ResolvedParams& params = batch[i];
      Value::Map doc;
      doc.emplace("id", Value::text(std::to_string(i)));
      doc.emplace("text", Value::text(detail::text_param(params, "text", kind)));
      if (spec.sends_language) {
        std::string language = "en";
        if (auto it = params.find("language"); it != params.end()) {
          if (it->second.kind() != ValueKind::text)
            raise(ErrorKind::schema_violation, "'language' must be text");
          language = it->second.as_text();
        }
        doc.emplace("language", Value::text(language));
      }
      documents.push_back(Value::map(std::move(doc)));
    }
    body.emplace("documents", Value::list(std::move(documents)));
  } else if (kind == ServiceKind::ocr || kind == ServiceKind::tag_image) {
    body.emplace("image", Value::text(detail::image_param(batch.front(), kind)));
  } else {  // anomaly_detect
    const ResolvedParams& params = batch.front();
    const Value& series = detail::require_param(params, "series", kind);
    if (series.kind() != ValueKind::list)
      raise(ErrorKind::schema_violation, "'series' must be a list of points");
    for (const Value& point : series.as_list()) {
      if (point.kind() != ValueKind::map || point.find("timestamp") == nullptr ||
          point.find("value") == nullptr || !point.find("value")->is_number())
        raise(ErrorKind::schema_violation, "series points need timestamp and numeric value");
    }
    body.emplace("series", series);
    std::string granularity = "hourly";
    if (auto it = params.find("granularity"); it != params.end()) {
      if (it->second.kind() != ValueKind::text)
        raise(ErrorKind::schema_violation, "'granularity' must be text");
      granularity = it->second.as_text();
    }
    body.emplace("granularity", Value::text(granularity));
  }

  std::string url = base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += spec.path;

  std::vector<Header> headers;
  if (api_key) headers.emplace_back("Ocp-Apim-Subscription-Key", *api_key);
  return make_request(Method::post, url, std::move(headers),
                      Entity::json(value_to_json_text(Value::map(std::move(body)))));
}

// ---------------------------------------------------------------------------
// Response validation

namespace detail {

inline const Value& require_key(const Value& map, const std::string& key) {
  if (map.kind() != ValueKind::map)
    raise(ErrorKind::schema_violation, "expected JSON object");
  const Value* v = map.find(key);
  if (v == nullptr) raise(ErrorKind::schema_violation, "missing '" + key + "'");
  return *v;
}

inline void require_text_key(const Value& map, const std::string& key) {
  if (require_key(map, key).kind() != ValueKind::text)
    raise(ErrorKind::schema_violation, "'" + key + "' must be text");
}

inline void validate_document(ServiceKind kind, const Value& doc) {
  require_text_key(doc, "id");
  switch (kind) {
    case ServiceKind::sentiment: {
      require_text_key(doc, "sentiment");
      const Value& scores = require_key(doc, "confidenceScores");
      for (const char* k : {"positive", "neutral", "negative"})
        if (!require_key(scores, k).is_number())
          raise(ErrorKind::schema_violation, "confidenceScores must be numeric");
      break;
    }
    case ServiceKind::language_detect: {
      const Value& lang = require_key(doc, "detectedLanguage");
      require_text_key(lang, "iso6391Name");
      if (!require_key(lang, "confidenceScore").is_number())
        raise(ErrorKind::schema_violation, "confidenceScore must be numeric");
      break;
    }
    case ServiceKind::key_phrase: {
      const Value& phrases = require_key(doc, "keyPhrases");
      if (phrases.kind() != ValueKind::list)
        raise(ErrorKind::schema_violation, "keyPhrases must be a list");
      for (const Value& p : phrases.as_list())
        if (p.kind() != ValueKind::text)
          raise(ErrorKind::schema_violation, "keyPhrases entries must be text");
      break;
    }
    case ServiceKind::named_entity: {
      const Value& entities = require_key(doc, "entities");
      if (entities.kind() != ValueKind::list)
        raise(ErrorKind::schema_violation, "entities must be a list");
      for (const Value& e : entities.as_list()) {
        require_text_key(e, "text");
        require_text_key(e, "category");
        if (require_key(e, "offset").kind() != ValueKind::int_ ||
            require_key(e, "length").kind() != ValueKind::int_)
          raise(ErrorKind::schema_violation, "entity offset/length must be integers");
      }
      break;
    }
    default: break;
  }
}

}  // namespace detail

/// Validates a 2xx response body against the service's wire schema and
/// returns the parsed Value for unbatching.
inline Value parse_service_response(ServiceKind kind, const HttpResponseData& resp) {
  if (resp.status / 100 != 2)
    raise(ErrorKind::service_error, "non-success status " + std::to_string(resp.status));
  Value parsed = parse_json_entity(resp);
  const ServiceSpec& spec = service_spec(kind);

  if (spec.documents_envelope) {
    const Value& documents = detail::require_key(parsed, "documents");
    if (documents.kind() != ValueKind::list)
      raise(ErrorKind::schema_violation, "'documents' must be a list");
    for (const Value& doc : documents.as_list()) detail::validate_document(kind, doc);
    if (const Value* errors = parsed.find("errors")) {
      if (errors->kind() != ValueKind::list)
        raise(ErrorKind::schema_violation, "'errors' must be a list");
      for (const Value& e : errors->as_list()) detail::require_text_key(e, "id");
    }
    return parsed;
  }

  switch (kind) {
    case ServiceKind::ocr:
      detail::require_text_key(parsed, "text");
      return parsed;
    case ServiceKind::tag_image: {
      const Value& tags = detail::require_key(parsed, "tags");
      if (tags.kind() != ValueKind::list)
        raise(ErrorKind::schema_violation, "'tags' must be a list");
      for (const Value& t : tags.as_list()) {
        detail::require_text_key(t, "name");
        if (!detail::require_key(t, "confidence").is_number())
          raise(ErrorKind::schema_violation, "tag confidence must be numeric");
      }
      return parsed;
    }
    case ServiceKind::anomaly_detect: {
      const Value& flags = detail::require_key(parsed, "isAnomaly");
      const Value& expected = detail::require_key(parsed, "expectedValues");
      if (flags.kind() != ValueKind::list || expected.kind() != ValueKind::list)
        raise(ErrorKind::schema_violation, "isAnomaly/expectedValues must be lists");
      if (flags.as_list().size() != expected.as_list().size())
        raise(ErrorKind::schema_violation, "isAnomaly/expectedValues length mismatch");
      for (const Value& b : flags.as_list())
        if (b.kind() != ValueKind::bool_)
          raise(ErrorKind::schema_violation, "isAnomaly entries must be booleans");
      for (const Value& v : expected.as_list())
        if (!v.is_number())
          raise(ErrorKind::schema_violation, "expectedValues entries must be numeric");
      return parsed;
    }
    default:
      raise(ErrorKind::schema_violation, "unhandled service kind");
  }
}

/// The single canonical value a response document contributes to the output
/// column. Chosen so common chains (e.g. detected language feeding a text
/// service's language parameter) work without extra plumbing.
inline Value extract_document_value(ServiceKind kind, const Value& doc) {
  switch (kind) {
    case ServiceKind::sentiment: return *doc.find("sentiment");
    case ServiceKind::language_detect: return *doc.find("detectedLanguage")->find("iso6391Name");
    case ServiceKind::key_phrase: return *doc.find("keyPhrases");
    case ServiceKind::named_entity: return *doc.find("entities");
    default: raise(ErrorKind::schema_violation, "not a documents-envelope service");
  }
}

/// Canonical value for single-result services (already-validated input).
inline Value extract_result_value(ServiceKind kind, const Value& parsed) {
  switch (kind) {
    case ServiceKind::ocr: return *parsed.find("text");
    case ServiceKind::tag_image: return *parsed.find("tags");
    case ServiceKind::anomaly_detect: {
      Value::Map out;
      out.emplace("isAnomaly", *parsed.find("isAnomaly"));
      out.emplace("expectedValues", *parsed.find("expectedValues"));
      return Value::map(std::move(out));
    }
    default: raise(ErrorKind::schema_violation, "not a single-result service");
  }
}

/// Fans a validated response back out to the rows of its batch. Documents are
/// matched by id (decimal within-batch index), so server-side reordering is
/// harmless. Rows named in the errors array — or absent entirely — become
/// Failure results; an id outside the sent range is a shape error.
inline std::vector<RowResult> unbatch_responses(ServiceKind kind, std::size_t batch_size,
                                                const Value& parsed) {
  const ServiceSpec& spec = service_spec(kind);

  if (!spec.documents_envelope) {
    if (batch_size != 1)
      raise(ErrorKind::batch_shape_mismatch, "single-result service with batch > 1");
    return {RowResult{extract_result_value(kind, parsed)}};
  }

  auto index_of_id = [&](const std::string& id) -> std::size_t {
    if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos ||
        id.size() > 9)
      raise(ErrorKind::batch_shape_mismatch, "response id '" + id + "' is not an index");
    std::size_t i = static_cast<std::size_t>(std::stol(id));
    if (i >= batch_size)
      raise(ErrorKind::batch_shape_mismatch,
            "response id '" + id + "' outside batch of " + std::to_string(batch_size));
    return i;
  };

  std::vector<std::optional<RowResult>> slots(batch_size);
  for (const Value& doc : parsed.find("documents")->as_list()) {
    std::size_t i = index_of_id(doc.find("id")->as_text());
    slots[i] = RowResult{extract_document_value(kind, doc)};
  }
  if (const Value* errors = parsed.find("errors")) {
    for (const Value& e : errors->as_list()) {
      std::size_t i = index_of_id(e.find("id")->as_text());
      std::string message = "service reported error";
      if (const Value* m = e.find("error"); m != nullptr && m->kind() == ValueKind::text)
        message = m->as_text();
      slots[i] = RowResult{RowFailure{ErrorKind::service_error, message, 1}};
    }
  }

  std::vector<RowResult> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    if (slots[i])
      out.push_back(std::move(*slots[i]));
    else
      out.push_back(RowResult{RowFailure{ErrorKind::service_error,
                                         "no response document for id " + std::to_string(i), 1}});
  }
  return out;
}

}  // namespace msvc
