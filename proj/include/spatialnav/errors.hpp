#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spatialnav {

enum class ErrorCode {
  usage,
  descriptor,
  lookup,
  generation,
  render,
  format,
  config,
  io,
  analysis,
  convergence,
  session,
  network,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::usage: return "usage_error";
    case ErrorCode::descriptor: return "descriptor_error";
    case ErrorCode::lookup: return "lookup_error";
    case ErrorCode::generation: return "generation_error";
    case ErrorCode::render: return "render_error";
    case ErrorCode::format: return "format_error";
    case ErrorCode::config: return "config_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::analysis: return "analysis_error";
    case ErrorCode::convergence: return "convergence_error";
    case ErrorCode::session: return "session_error";
    case ErrorCode::network: return "network_error";
  }
  return "error";
}

/// Process exit status used by the CLI for each error family.
constexpr int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::usage: return 2;
    case ErrorCode::config: return 3;
    case ErrorCode::io:
    case ErrorCode::format: return 4;
    case ErrorCode::descriptor:
    case ErrorCode::generation:
    case ErrorCode::render: return 5;
    case ErrorCode::analysis:
    case ErrorCode::convergence: return 6;
    case ErrorCode::network: return 7;
    case ErrorCode::lookup:
    case ErrorCode::session: return 8;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Convenience constructors keep call sites short.
inline Error descriptor_error(const std::string& m) { return {ErrorCode::descriptor, m}; }
inline Error lookup_error(const std::string& m) { return {ErrorCode::lookup, m}; }
inline Error generation_error(const std::string& m) { return {ErrorCode::generation, m}; }
inline Error render_error(const std::string& m) { return {ErrorCode::render, m}; }
inline Error format_error(const std::string& m) { return {ErrorCode::format, m}; }
inline Error config_error(const std::string& m) { return {ErrorCode::config, m}; }
inline Error io_error(const std::string& m) { return {ErrorCode::io, m}; }
inline Error analysis_error(const std::string& m) { return {ErrorCode::analysis, m}; }

}  // namespace spatialnav
