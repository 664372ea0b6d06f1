#include "bouss/error.hpp"

#include <sstream>

namespace bouss {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::ostringstream os;
  os << "invalid configuration (" << violations.size() << " violation"
     << (violations.size() == 1 ? "" : "s") << ")";
  for (const auto& v : violations) os << "\n  - " << v;
  return os.str();
}

std::string picard_message(int iterations, double last_change) {
  std::ostringstream os;
  os << "Picard iteration did not converge after " << iterations
     << " iterations (last change " << last_change << ")";
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

PicardDiverged::PicardDiverged(int iterations, double last_change)
    : Error(picard_message(iterations, last_change)),
      iterations_(iterations),
      last_change_(last_change) {}

}  // namespace bouss
