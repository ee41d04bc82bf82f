#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace claimaudit {

// Base for every error raised by the toolkit. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Bad or missing configuration (endpoint, credentials, flag values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(std::string endpoint, const std::string& what)
      : Error(what + " [endpoint: " + endpoint + "]"), endpoint_(std::move(endpoint)) {}
  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
};

class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::string raw_payload)
      : Error(what), raw_payload_(std::move(raw_payload)) {}
  const std::string& raw_payload() const { return raw_payload_; }

 private:
  std::string raw_payload_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  ConsistencyError(const std::string& what, std::vector<std::string> offenders)
      : Error(what + format_offenders(offenders)), offenders_(std::move(offenders)) {}
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  static std::string format_offenders(const std::vector<std::string>& ids) {
    if (ids.empty()) return {};
    std::string out = " (";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i > 0) out += ", ";
      out += ids[i];
    }
    return out + ")";
  }
  std::vector<std::string> offenders_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Undefined metric, e.g. balanced accuracy over a single-class label set.
class MetricError : public Error {
 public:
  using Error::Error;
};

// A claim could not be judged because its provider kept failing.
class JudgmentError : public Error {
 public:
  JudgmentError(std::string claim_id, const std::string& what)
      : Error("claim " + claim_id + ": " + what), claim_id_(std::move(claim_id)) {}
  const std::string& claim_id() const { return claim_id_; }

 private:
  std::string claim_id_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace claimaudit
