#pragma once

#include <stdexcept>
#include <string>

namespace mcqa {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A record parsed but violates the dataset schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A backend returned something outside its contract (bad bounds, bad range).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A backend failed on its own terms (timeout, model error).
class BackendError : public Error {
 public:
  using Error::Error;
};

// Generator output could not be turned into a Q-A pair.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcqa
