#pragma once

#include <stdexcept>
#include <string>

namespace pqflow
{

// Fields defined on different grids were combined.
class StructuralError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

// A numeric parameter is outside its admissible range (p <= 1, b < 0, ...).
class ParameterError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// A field violates a pointwise invariant (non-SPD metric, non-finite value).
class StateError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Time stepping could not produce a valid state even after dt halvings.
class FlowError : public std::runtime_error
{
public:
  FlowError(const std::string &what, double t, double min_det)
    : std::runtime_error(what), time(t), min_det_g(min_det)
  {
  }
  double time;
  double min_det_g;
};

class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace pqflow
