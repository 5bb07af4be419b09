#pragma once

#include <stdexcept>
#include <string>

namespace dnr {

// Error classes map 1:1 to CLI exit codes (see tools/dnrsim.cpp).
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PowerFlowError : std::runtime_error {
    explicit PowerFlowError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularNetworkError : std::runtime_error {
    explicit SingularNetworkError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dnr
