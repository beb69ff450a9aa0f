#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input data (bad indices, parse failures, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The model is not identifiable on the supplied data: a disconnected
/// comparison graph, or covariates lying inside the span of the incidence
/// matrix.
class IdentifiabilityError : public Error {
 public:
  IdentifiabilityError(const std::string& what,
                       std::vector<std::vector<std::size_t>> components = {},
                       std::vector<std::vector<double>> directions = {})
      : Error(what),
        components_(std::move(components)),
        directions_(std::move(directions)) {}

  /// Connected components of the comparison graph (item indices), when the
  /// failure is a disconnected graph.
  const std::vector<std::vector<std::size_t>>& components() const noexcept {
    return components_;
  }
  /// Coefficient vectors c with X c inside im(M), when the failure comes from
  /// the covariates.
  const std::vector<std::vector<double>>& directions() const noexcept {
    return directions_;
  }

 private:
  std::vector<std::vector<std::size_t>> components_;
  std::vector<std::vector<double>> directions_;
};

/// A statistic needs a positive residual variance but the fit is exact.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Invalid simulation or CLI configuration. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace graphrank
