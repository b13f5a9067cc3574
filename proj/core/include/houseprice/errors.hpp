#pragma once

#include <stdexcept>
#include <string>

namespace houseprice {

// Malformed or inconsistent input data (bad rows, missing files, non-finite values).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix/image shapes that do not agree.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A value outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// A quantity that is undefined for the given input (e.g. R^2 with zero variance).
class UndefinedError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace houseprice
