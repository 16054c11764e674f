#include "sbl/error.hpp"

namespace sbl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::empty_set: return "empty-set";
    case ErrorKind::degenerate: return "degenerate-input";
    case ErrorKind::label: return "label";
    case ErrorKind::config: return "config";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::episode: return "episode";
    case ErrorKind::path: return "path";
    case ErrorKind::format: return "format";
    case ErrorKind::refusal: return "refusal";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + " error: " + what);
}

}  // namespace sbl
