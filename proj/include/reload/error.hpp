#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reload {

enum class ErrorCode {
  EmptyWorkload,
  MissingScript,
  ConnectFailure,
  CatalogMismatch,
  VersionMismatch,
  IoFailure,
  ArchMismatch,
  ConfigInvalid,
  ZeroReference,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to a diagnostic without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace reload
