#pragma once

#include <stdexcept>
#include <string>

namespace irlw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a formula (p <= 1, eps = 0 where eps > 0 is needed, ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Vectors from different spaces were combined, or a length does not match the space.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// A parameter bound has no admissible value (empty step-size interval, C_p <= p, ...).
class InfeasibleError : public Error
{
public:
  using Error::Error;
};

/// Invalid solver, schedule or experiment configuration.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// A sampling-based estimator could not produce a usable sample.
class SamplingError : public Error
{
public:
  using Error::Error;
};

/// Malformed graph input (disconnected network, bad node index).
class StructuralError : public Error
{
public:
  using Error::Error;
};

/// An analysis operation was called on a trace that cannot support it.
class PreconditionError : public Error
{
public:
  using Error::Error;
};

} // namespace irlw
