#pragma once

#include <stdexcept>
#include <string>

namespace gsamr {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// exit codes: UsageError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Malformed corpora, Penman syntax errors, vocabulary mismatches.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, shape mismatches, fully-masked attention rows.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace gsamr
