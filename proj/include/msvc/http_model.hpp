#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msvc/errors.hpp"
#include "msvc/value.hpp"

namespace msvc {

enum class Method { get, post, put, delete_, head };

constexpr std::string_view method_name(Method m) {
  switch (m) {
    case Method::get: return "GET";
    case Method::post: return "POST";
    case Method::put: return "PUT";
    case Method::delete_: return "DELETE";
    case Method::head: return "HEAD";
  }
  return "?";
}

constexpr bool method_allows_entity(Method m) {
  return m != Method::get && m != Method::head;
}

using Header = std::pair<std::string, std::string>;

struct Entity {
  std::string content_type;
  std::vector<std::uint8_t> body;

  static Entity json(const std::string& text) {
    return Entity{"application/json", std::vector<std::uint8_t>(text.begin(), text.end())};
  }

  std::string_view body_text() const {
    return {reinterpret_cast<const char*>(body.data()), body.size()};
  }

  friend bool operator==(const Entity& a, const Entity& b) {
    return a.content_type == b.content_type && a.body == b.body;
  }
};

// ---------------------------------------------------------------------------
// URL parsing: scheme://host[:port]/path[?query]

struct UrlParts {
  std::string scheme;
  std::string host;
  int port;  // defaulted from scheme when absent
  std::string path;
  std::string query;

  std::string target() const { return query.empty() ? path : path + "?" + query; }
  std::string endpoint_key() const { return host + ":" + std::to_string(port); }
};

inline UrlParts parse_url(std::string_view url) {
  UrlParts out;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) raise(ErrorKind::invalid_url, std::string(url));
  out.scheme = std::string(url.substr(0, scheme_end));
  if (out.scheme != "http" && out.scheme != "https")
    raise(ErrorKind::invalid_url, "unsupported scheme '" + out.scheme + "'");
  std::string_view rest = url.substr(scheme_end + 3);
  auto path_start = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, path_start);
  if (path_start == std::string_view::npos) {
    out.path = "/";
  } else if (rest[path_start] == '?') {
    out.path = "/";
    out.query = std::string(rest.substr(path_start + 1));
  } else {
    std::string_view tail = rest.substr(path_start);
    auto q = tail.find('?');
    out.path = std::string(tail.substr(0, q));
    if (q != std::string_view::npos) out.query = std::string(tail.substr(q + 1));
  }
  auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    out.host = std::string(authority);
    out.port = out.scheme == "https" ? 443 : 80;
  } else {
    out.host = std::string(authority.substr(0, colon));
    std::string_view port_str = authority.substr(colon + 1);
    if (port_str.empty() || port_str.find_first_not_of("0123456789") != std::string_view::npos)
      raise(ErrorKind::invalid_url, "bad port in '" + std::string(url) + "'");
    long p = std::stol(std::string(port_str));
    if (p < 1 || p > 65535) raise(ErrorKind::invalid_url, "port out of range");
    out.port = static_cast<int>(p);
  }
  if (out.host.empty()) raise(ErrorKind::invalid_url, "empty host in '" + std::string(url) + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Request / response as structured column values

struct HttpRequestData {
  Method method = Method::get;
  std::string url;
  std::vector<Header> headers;
  std::optional<Entity> entity;

  friend bool operator==(const HttpRequestData& a, const HttpRequestData& b) {
    return a.method == b.method && a.url == b.url && a.headers == b.headers &&
           a.entity == b.entity;
  }
};

struct HttpResponseData {
  int status = 0;
  std::string reason;
  std::vector<Header> headers;
  std::optional<Entity> entity;
  double latency_ms = 0.0;  // client-measured

  friend bool operator==(const HttpResponseData& a, const HttpResponseData& b) {
    return a.status == b.status && a.reason == b.reason && a.headers == b.headers &&
           a.entity == b.entity;  // latency is a measurement, not identity
  }
};

namespace detail {
inline bool has_control_char(std::string_view s) {
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7f) return true;
  }
  return false;
}
}  // namespace detail

/// Validated request constructor; header order is preserved.
inline HttpRequestData make_request(Method method, std::string url, std::vector<Header> headers,
                                    std::optional<Entity> entity = std::nullopt) {
  parse_url(url);  // throws invalid_url
  for (const Header& h : headers) {
    if (h.first.empty() || detail::has_control_char(h.first))
      raise(ErrorKind::invalid_header, "bad header name '" + h.first + "'");
    if (detail::has_control_char(h.second))
      raise(ErrorKind::invalid_header, "control character in value of '" + h.first + "'");
  }
  if (entity && !method_allows_entity(method))
    raise(ErrorKind::entity_on_bodyless_method, std::string(method_name(method)));
  return HttpRequestData{method, std::move(url), std::move(headers), std::move(entity)};
}

namespace detail {
inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x += 'a' - 'A';
    if (y >= 'A' && y <= 'Z') y += 'a' - 'A';
    if (x != y) return false;
  }
  return true;
}
}  // namespace detail

/// First header matching `name` case-insensitively, else nullopt.
inline std::optional<std::string> get_header(const std::vector<Header>& headers,
                                            std::string_view name) {
  for (const Header& h : headers)
    if (detail::iequals(h.first, name)) return h.second;
  return std::nullopt;
}

inline std::optional<std::string> get_header(const HttpRequestData& req, std::string_view name) {
  return get_header(req.headers, name);
}

inline std::optional<std::string> get_header(const HttpResponseData& resp, std::string_view name) {
  return get_header(resp.headers, name);
}

/// Decodes the response entity as UTF-8 JSON into the Value union.
inline Value parse_json_entity(const HttpResponseData& resp) {
  if (!resp.entity) raise(ErrorKind::no_entity, "response has no entity");
  return value_from_json_text(resp.entity->body_text());
}

// ---------------------------------------------------------------------------
// Column encoding: requests and responses as table values

namespace detail {

inline Value headers_to_value(const std::vector<Header>& headers) {
  Value::List out;
  for (const Header& h : headers)
    out.push_back(Value::list({Value::text(h.first), Value::text(h.second)}));
  return Value::list(std::move(out));
}

inline std::vector<Header> headers_from_value(const Value& v) {
  std::vector<Header> out;
  for (const Value& pair : v.as_list()) {
    const Value::List& kv = pair.as_list();
    out.emplace_back(kv.at(0).as_text(), kv.at(1).as_text());
  }
  return out;
}

inline Value entity_to_value(const Entity& e) {
  Value::Map m;
  m.emplace("content_type", Value::text(e.content_type));
  m.emplace("body", Value::bytes(e.body));
  return Value::map(std::move(m));
}

inline Entity entity_from_value(const Value& v) {
  return Entity{v.find("content_type")->as_text(), v.find("body")->as_bytes()};
}

}  // namespace detail

inline Value to_value(const HttpRequestData& req) {
  Value::Map m;
  m.emplace("method", Value::text(std::string(method_name(req.method))));
  m.emplace("url", Value::text(req.url));
  m.emplace("headers", detail::headers_to_value(req.headers));
  m.emplace("entity", req.entity ? detail::entity_to_value(*req.entity) : Value::null());
  return Value::map(std::move(m));
}

inline HttpRequestData request_from_value(const Value& v) {
  HttpRequestData out;
  std::string method = v.find("method")->as_text();
  if (method == "GET") out.method = Method::get;
  else if (method == "POST") out.method = Method::post;
  else if (method == "PUT") out.method = Method::put;
  else if (method == "DELETE") out.method = Method::delete_;
  else if (method == "HEAD") out.method = Method::head;
  else raise(ErrorKind::schema_mismatch, "unknown method '" + method + "'");
  out.url = v.find("url")->as_text();
  out.headers = detail::headers_from_value(*v.find("headers"));
  const Value* entity = v.find("entity");
  if (entity != nullptr && !entity->is_null()) out.entity = detail::entity_from_value(*entity);
  return out;
}

inline Value to_value(const HttpResponseData& resp) {
  Value::Map m;
  m.emplace("status", Value::integer(resp.status));
  m.emplace("reason", Value::text(resp.reason));
  m.emplace("headers", detail::headers_to_value(resp.headers));
  m.emplace("entity", resp.entity ? detail::entity_to_value(*resp.entity) : Value::null());
  m.emplace("latency_ms", Value::real(resp.latency_ms));
  return Value::map(std::move(m));
}

inline HttpResponseData response_from_value(const Value& v) {
  HttpResponseData out;
  out.status = static_cast<int>(v.find("status")->as_int());
  out.reason = v.find("reason")->as_text();
  out.headers = detail::headers_from_value(*v.find("headers"));
  const Value* entity = v.find("entity");
  if (entity != nullptr && !entity->is_null()) out.entity = detail::entity_from_value(*entity);
  out.latency_ms = v.find("latency_ms")->as_float();
  return out;
}

}  // namespace msvc
