#pragma once

#include <stdexcept>
#include <string>

namespace herdmetric {

// Error taxonomy shared by every module. The CLI maps kinds onto exit codes:
// config/dimension/validation/sampling/mining/evaluation -> 2, data/parse -> 3,
// instability -> 4.
enum class ErrorKind {
  config,
  dimension,
  validation,
  sampling,
  mining,
  evaluation,
  data,
  parse,
  instability,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(ErrorKind::dimension, m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(ErrorKind::validation, m) {}
};
struct SamplingError : Error {
  explicit SamplingError(const std::string& m) : Error(ErrorKind::sampling, m) {}
};
struct MiningError : Error {
  explicit MiningError(const std::string& m) : Error(ErrorKind::mining, m) {}
};
struct EvaluationError : Error {
  explicit EvaluationError(const std::string& m) : Error(ErrorKind::evaluation, m) {}
};
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorKind::parse, m) {}
};
struct InstabilityError : Error {
  explicit InstabilityError(const std::string& m) : Error(ErrorKind::instability, m) {}
};

int exit_code_for(ErrorKind kind);

}  // namespace herdmetric
