#pragma once

#include <stdexcept>
#include <string>

namespace tdreg {

// Base of every error the library throws. Harness code maps subclasses onto
// CLI exit codes (config problems vs. numeric failures).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too few observations, empty datasets, and similar.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A document shorter than the statistic needs (three words for triples).
class InsufficientLengthError : public Error {
 public:
  InsufficientLengthError(const std::string& what, long doc_index = -1)
      : Error(what), doc_index_(doc_index) {}
  long doc_index() const { return doc_index_; }

 private:
  long doc_index_;
};

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Arguments outside the mathematical domain (negative counts, zero entries
// under a log, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdreg
