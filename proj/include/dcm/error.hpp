#pragma once

#include <stdexcept>
#include <string>

namespace dcm {

// Base error for everything the toolkit throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A declared column/attribute/coefficient does not exist or is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A file cell could not be parsed; message carries the row number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structural violation of the dataset contract (chosen rows, availability).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where the math requires a finite one.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Optimizer / covariance failures.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (CLI or config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcm
