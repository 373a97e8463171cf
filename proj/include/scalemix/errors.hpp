#pragma once

#include <stdexcept>
#include <string>

namespace scalemix {

// Input problems the caller can fix: bad arguments, configs, files.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public UserError {
 public:
  using UserError::UserError;
};

class LayoutError : public UserError {
 public:
  using UserError::UserError;
};

class ShapeError : public UserError {
 public:
  using UserError::UserError;
};

class ConfigError : public UserError {
 public:
  using UserError::UserError;
};

class IngestError : public UserError {
 public:
  using UserError::UserError;
};

class SizeError : public UserError {
 public:
  using UserError::UserError;
};

// Failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace scalemix
