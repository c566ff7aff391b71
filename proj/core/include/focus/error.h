#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace focus {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad shape, out-of-range
// hyperparameter, empty input where one is required).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Arithmetic between logit vectors bound to different vocabularies.
class VocabMismatch : public Error {
 public:
  using Error::Error;
};

// A dataset or report file does not follow its schema. `line()` is 1-based;
// 0 when the failure is not tied to a line.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Failure reported by a logit provider.
class ProviderError : public Error {
 public:
  enum class Kind {
    kTransport,      // connection refused / reset, retry budget exhausted
    kTimeout,        // request exceeded its deadline
    kProtocol,       // response violates the wire protocol
    kServer,         // well-formed error object returned by the server
    kVocabMismatch,  // vocab_id changed between responses
    kInvalidRequest  // request rejected locally (e.g. unparseable prompt)
  };

  ProviderError(Kind kind, const std::string& message, std::string code = {})
      : Error(message), kind_(kind), code_(std::move(code)) {}

  Kind kind() const noexcept { return kind_; }
  // Server-side error code for kServer; empty otherwise.
  const std::string& code() const noexcept { return code_; }

 private:
  Kind kind_;
  std::string code_;
};

const char* to_string(ProviderError::Kind kind);

}  // namespace focus
