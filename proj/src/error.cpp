#include "vinetail/error.hpp"

namespace vinetail {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::schema: return "schema";
    case ErrorCode::row: return "row";
    case ErrorCode::duplicate_key: return "duplicate_key";
    case ErrorCode::unrecoverable_gap: return "unrecoverable_gap";
    case ErrorCode::missing_day: return "missing_day";
    case ErrorCode::domain: return "domain";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::optimization: return "optimization";
    case ErrorCode::numerical: return "numerical";
    case ErrorCode::family_infeasible: return "family_infeasible";
    case ErrorCode::selection: return "selection";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::config: return "config";
    case ErrorCode::exists: return "exists";
  }
  return "unknown";
}

}  // namespace vinetail
