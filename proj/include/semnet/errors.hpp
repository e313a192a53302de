#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace semnet {

// Invalid scenario or generator parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No strictly interior point exists for the relaxed association problem.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::size_t> overloaded)
      : std::runtime_error(what), overloaded_(std::move(overloaded)) {}
  const std::vector<std::size_t>& overloaded() const { return overloaded_; }

 private:
  std::vector<std::size_t> overloaded_;
};

// Iterative solver hit its iteration cap.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  // Objective value per outer iteration up to the failure.
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace semnet
