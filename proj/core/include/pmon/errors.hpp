// pmon/errors.hpp -- error taxonomy shared by the library and the CLI.
//
// ParseError    : malformed input text (JSON syntax, bad override syntax).
// ConfigError   : bad or inconsistent inputs detected before integration starts.
// NumericalError: failures during integration or post-processing (non-finite
//                 state, degenerate coverage, exhausted event iteration).
#pragma once

#include <stdexcept>
#include <string>

namespace pmon {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleError : public ConfigError {
 public:
  explicit InfeasibleError(const std::string& what) : ConfigError(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateCoverageError : public NumericalError {
 public:
  explicit DegenerateCoverageError(const std::string& what)
      : NumericalError(what) {}
};

}  // namespace pmon
