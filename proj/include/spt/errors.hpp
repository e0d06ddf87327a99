// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace spt {

// Bad user input: configs, manifests, shapes, contract violations. Exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

class DataError : public ValidationError {
 public:
  explicit DataError(const std::string& msg) : ValidationError(msg) {}
};

// Non-finite values surfaced during compute. Exit code 2.
class NumericFault : public std::runtime_error {
 public:
  explicit NumericFault(const std::string& msg) : std::runtime_error(msg) {}
};

// File/parse problems. Messages always name the offending path. Exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spt
