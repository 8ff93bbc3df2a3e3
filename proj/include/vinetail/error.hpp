#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vinetail {

enum class ErrorCode {
  io,
  schema,
  row,
  duplicate_key,
  unrecoverable_gap,
  missing_day,
  domain,
  degenerate,
  optimization,
  numerical,
  family_infeasible,
  selection,
  resolution,
  unsupported,
  config,
  exists,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code and an
// optional location (file:line, date, hour, ...). The CLI turns these into
// {code, message, location} JSON documents.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string location = {})
      : std::runtime_error(message), code_(code), location_(std::move(location)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::string location_;
};

}  // namespace vinetail
