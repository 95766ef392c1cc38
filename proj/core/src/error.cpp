#include "mspgm/error.hpp"

namespace mspgm {

NonFiniteState::NonFiniteState(std::size_t step, std::size_t path)
    : Error("non-finite state at step " + std::to_string(step) + ", path " + std::to_string(path)),
      step_(step),
      path_(path) {}

RiccatiBlowUp::RiccatiBlowUp(double time)
    : Error("Riccati solution blew up at t = " + std::to_string(time)), time_(time) {}

PlanError::PlanError(std::size_t index, const std::string& what)
    : Error("plan index " + std::to_string(index) + ": " + what), index_(index) {}

namespace {
std::string config_message(const std::string& field, std::size_t line, const std::string& what) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += field + ": ";
    return msg + what;
}
}  // namespace

ConfigError::ConfigError(std::string field, std::size_t line, const std::string& what)
    : Error(config_message(field, line, what)), field_(std::move(field)), line_(line) {}

}  // namespace mspgm
