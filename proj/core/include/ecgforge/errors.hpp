#pragma once

#include <stdexcept>
#include <string>

namespace ecgforge {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not match the operation's contract.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A layer geometry would produce a non-positive output length.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Index (e.g. class label) outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed input while parsing a file format.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// HTTP or filesystem transport failure while fetching records.
class TransportError : public Error {
 public:
  TransportError(const std::string& msg, int http_status, int retries)
      : Error(msg), http_status(http_status), retries(retries) {}
  int http_status = 0;
  int retries = 0;
};

/// File contents contradict their own integrity metadata (checksums etc).
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

/// Requested ECG lead is not present in a record.
class MissingLeadError : public Error {
 public:
  using Error::Error;
};

/// A dataset or network could not be constructed as requested.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Invalid use of a stateful object (locks, lifecycle).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecgforge
