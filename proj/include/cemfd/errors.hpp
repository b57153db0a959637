#pragma once

#include <stdexcept>
#include <string>

namespace cemfd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An electrode received no lattice cell with positive boundary measure.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

class IndexOutOfSet : public Error {
 public:
  using Error::Error;
};

class PointOutsideLattice : public Error {
 public:
  using Error::Error;
};

class DisconnectedSystem : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class InfeasibleBase : public Error {
 public:
  using Error::Error;
};

class StalledLineSearch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cemfd
