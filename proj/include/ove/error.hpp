#pragma once

#include <stdexcept>
#include <string>

namespace ove
{

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Two operands live on different grids or wavelengths.
class GridMismatch : public Error
{
public:
  using Error::Error;
};

/// A value violates a documented precondition or invariant.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// I/O and file-format failures.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// The optimizer hit a non-finite loss or gradient.
class OptimizerAbort : public Error
{
public:
  OptimizerAbort(const std::string& what, int iteration)
      : Error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration)
  {
  }

  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

} // namespace ove
