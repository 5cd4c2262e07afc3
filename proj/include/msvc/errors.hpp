#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msvc {

enum class ErrorKind {
  schema_mismatch,
  invalid_partition_count,
  duplicate_column,
  length_mismatch,
  missing_column,
  invalid_url,
  invalid_header,
  entity_on_bodyless_method,
  no_entity,
  malformed_json,
  depth_exceeded,
  invalid_config,
  attempts_exhausted,
  client_error,
  transport_error,
  unknown_parameter,
  missing_required_parameter,
  batch_too_large,
  batch_shape_mismatch,
  schema_violation,
  service_error,
  port_in_use,
  io_error,
};

constexpr std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::schema_mismatch: return "schema_mismatch";
    case ErrorKind::invalid_partition_count: return "invalid_partition_count";
    case ErrorKind::duplicate_column: return "duplicate_column";
    case ErrorKind::length_mismatch: return "length_mismatch";
    case ErrorKind::missing_column: return "missing_column";
    case ErrorKind::invalid_url: return "invalid_url";
    case ErrorKind::invalid_header: return "invalid_header";
    case ErrorKind::entity_on_bodyless_method: return "entity_on_bodyless_method";
    case ErrorKind::no_entity: return "no_entity";
    case ErrorKind::malformed_json: return "malformed_json";
    case ErrorKind::depth_exceeded: return "depth_exceeded";
    case ErrorKind::invalid_config: return "invalid_config";
    case ErrorKind::attempts_exhausted: return "attempts_exhausted";
    case ErrorKind::client_error: return "client_error";
    case ErrorKind::transport_error: return "transport_error";
    case ErrorKind::unknown_parameter: return "unknown_parameter";
    case ErrorKind::missing_required_parameter: return "missing_required_parameter";
    case ErrorKind::batch_too_large: return "batch_too_large";
    case ErrorKind::batch_shape_mismatch: return "batch_shape_mismatch";
    case ErrorKind::schema_violation: return "schema_violation";
    case ErrorKind::service_error: return "service_error";
    case ErrorKind::port_in_use: return "port_in_use";
    case ErrorKind::io_error: return "io_error";
  }
  return "unknown";
}

/// Exception carrying a machine-readable kind next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace msvc
