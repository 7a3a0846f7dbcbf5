#pragma once

#include <stdexcept>
#include <string>

namespace drp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NoPathError : public Error {
 public:
  using Error::Error;
};

/// Raised when a hop crosses a link with no available bandwidth.
class SaturatedLink : public Error {
 public:
  explicit SaturatedLink(const std::string& link_id)
      : Error("link '" + link_id + "' is saturated"), link(link_id) {}
  std::string link;
};

/// Raised when an instance runs on a device with no available capacity.
class SaturatedDevice : public Error {
 public:
  explicit SaturatedDevice(const std::string& device_id)
      : Error("device '" + device_id + "' is saturated"), device(device_id) {}
  std::string device;
};

class InvalidPlacement : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class EmptySelection : public Error {
 public:
  using Error::Error;
};

}  // namespace drp
