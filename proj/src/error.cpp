#include "qmlab/error.hpp"

#include <sstream>

namespace qmlab {

namespace {

std::string refine_message(std::size_t index, double step) {
  std::ostringstream os;
  os << "refine path: step " << index << " -> " << index + 1 << " moves " << step
     << " turns (limit 0.5)";
  return os.str();
}

}  // namespace

RefineError::RefineError(std::size_t index, double step_turns)
    : NumericalError(refine_message(index, step_turns)), index_(index), step_turns_(step_turns) {}

EvaluationError::EvaluationError(long long power, const std::string& what)
    : std::runtime_error("evaluation failed at power p=" + std::to_string(power) + ": " + what),
      power_(power) {}

}  // namespace qmlab
