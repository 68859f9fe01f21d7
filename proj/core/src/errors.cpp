#include "fdemle/errors.hpp"

namespace fdemle {

ParseError::ParseError(const std::string& what, std::size_t line)
    : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}

DivergenceError::DivergenceError(const std::string& what, int step)
    : NumericError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

SingularityError::SingularityError(const std::string& what, int node, double condition)
    : NumericError(what + " (node " + std::to_string(node) + ", condition " +
                   std::to_string(condition) + ")"),
      node_(node),
      condition_(condition) {}

UnreliableScoreError::UnreliableScoreError(const std::string& what, int observation)
    : Error(what + " (observation " + std::to_string(observation) + ")"),
      observation_(observation) {}

}  // namespace fdemle
