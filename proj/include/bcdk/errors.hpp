#pragma once

#include <stdexcept>
#include <string>

namespace bcdk {

// Malformed or inconsistent configuration (config files, flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files, malformed input records.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcdk
