#pragma once

namespace oracle
{

struct CircleResult
{
  double quotient;
  int iterations;
  bool converged;
};

// Minimizes sum h |D+u|^p / sum h |u|^p over periodic grid functions on a
// circle of length L with sum |u|^{p-2} u = 0, using forward differences and
// a Kacanov-preconditioned descent. Written independently of the library.
CircleResult circle_p_quotient(int n, double L, double p);

}  // namespace oracle
