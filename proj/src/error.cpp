#include "reload/error.hpp"

namespace reload {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyWorkload: return "EmptyWorkload";
    case ErrorCode::MissingScript: return "MissingScript";
    case ErrorCode::ConnectFailure: return "ConnectFailure";
    case ErrorCode::CatalogMismatch: return "CatalogMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ArchMismatch: return "ArchMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace reload
