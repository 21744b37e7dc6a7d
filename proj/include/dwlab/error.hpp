#pragma once

#include <stdexcept>
#include <string>

namespace dwlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Adaptive quadrature that could not reach the requested tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : Error(what + " (achieved error bound " + std::to_string(achieved) + ")"),
        achieved_error_(achieved) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : Error(what + " (last good time " + std::to_string(last_good_time) + ")"),
        last_good_time_(last_good_time) {}
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

class RegimeError : public Error {
 public:
  using Error::Error;
};

// Interval leaves the elliptic part; carries the crossing time.
class ZoneError : public Error {
 public:
  ZoneError(const std::string& what, double crossing)
      : Error(what), crossing_time_(crossing) {}
  double crossing_time() const noexcept { return crossing_time_; }

 private:
  double crossing_time_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace dwlab
