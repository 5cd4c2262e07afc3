#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "msvc/errors.hpp"
#include "msvc/http_model.hpp"

// The default listen backlog (5) overflows when a job opens its whole
// connection fan-out at once; the kernel then falls back to SYN cookies and
// occasional cookie rejections reset freshly established connections. Defined
// wherever httplib is included so all translation units agree.
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
#include <httplib.h>

namespace msvc {

struct TransportError {
  std::string message;
};

using TransportResult = std::variant<HttpResponseData, TransportError>;

/// Boundary between the client stack and the wire. Implementations must be
/// safe to call from many worker threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResult send(const HttpRequestData& request) = 0;
};

struct TransportOptions {
  int connect_timeout_ms = 2000;
  int read_timeout_ms = 30000;
  // Extra client-side delay added to every request, for modelling a slow
  // network path without touching the server.
  double injected_delay_ms = 0.0;
};

/// Real HTTP transport. Keeps a free-list of keep-alive connections per
/// host:port so concurrent workers do not fight over a single socket.
class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(TransportOptions options = {}) : options_(options) {}

  TransportResult send(const HttpRequestData& request) override {
    UrlParts url;
    try {
      url = parse_url(request.url);
    } catch (const Error& e) {
      return TransportError{e.what()};
    }
    if (url.scheme != "http")
      return TransportError{"scheme '" + url.scheme + "' not supported by this transport"};

    auto started = std::chrono::steady_clock::now();
    if (options_.injected_delay_ms > 0.0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(options_.injected_delay_ms));
    }

    Lease lease = acquire(url);
    httplib::Headers headers;
    for (const Header& h : request.headers) headers.emplace(h.first, h.second);

    std::string body;
    std::string content_type;
    if (request.entity) {
      body.assign(request.entity->body.begin(), request.entity->body.end());
      content_type = request.entity->content_type;
    }

    httplib::Result res = dispatch(*lease.client, request.method, url.target(), headers, body,
                                   content_type);
    double elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();

    if (!res) {
      lease.reusable = false;
      release(std::move(lease));
      return TransportError{httplib::to_string(res.error())};
    }
    release(std::move(lease));

    HttpResponseData out;
    out.status = res->status;
    out.reason = res->reason;
    out.latency_ms = elapsed_ms;
    for (const auto& [name, value] : res->headers) out.headers.emplace_back(name, value);
    if (!res->body.empty()) {
      Entity entity;
      entity.content_type = res->get_header_value("Content-Type");
      entity.body.assign(res->body.begin(), res->body.end());
      out.entity = std::move(entity);
    }
    return out;
  }

 private:
  struct Lease {
    std::string key;
    std::unique_ptr<httplib::Client> client;
    bool reusable = true;
  };

  Lease acquire(const UrlParts& url) {
    Lease lease;
    lease.key = url.endpoint_key();
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto& pool = idle_[lease.key];
      if (!pool.empty()) {
        lease.client = std::move(pool.back());
        pool.pop_back();
      }
    }
    if (!lease.client) {
      lease.client = std::make_unique<httplib::Client>(url.host, url.port);
      lease.client->set_connection_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
      lease.client->set_read_timeout(std::chrono::milliseconds(options_.read_timeout_ms));
      lease.client->set_keep_alive(true);
      // Nagle + delayed ACKs would add tens of milliseconds to every request.
      lease.client->set_tcp_nodelay(true);
    }
    return lease;
  }

  void release(Lease lease) {
    if (!lease.reusable) return;  // drop broken connections
    std::lock_guard<std::mutex> lock(mutex_);
    idle_[lease.key].push_back(std::move(lease.client));
  }

  static httplib::Result dispatch(httplib::Client& client, Method method,
                                  const std::string& target, const httplib::Headers& headers,
                                  const std::string& body, const std::string& content_type) {
    switch (method) {
      case Method::get: return client.Get(target, headers);
      case Method::head: return client.Head(target, headers);
      case Method::post: return client.Post(target, headers, body, content_type);
      case Method::put: return client.Put(target, headers, body, content_type);
      case Method::delete_: return client.Delete(target, headers, body, content_type);
    }
    return httplib::Result{nullptr, httplib::Error::Unknown};
  }

  TransportOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::vector<std::unique_ptr<httplib::Client>>> idle_;
};

}  // namespace msvc
