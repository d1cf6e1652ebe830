#pragma once

#include <vector>

#include "pqflow/grid.hpp"

namespace pqflow
{

// Determinant and inverse of a node tensor for the given dimension.
double sym_det(const SymMat &g, int dim);
SymMat sym_inverse(const SymMat &g, int dim);
// g^{ij} a_i b_j for covariant a, b.
double sym_contract(const SymMat &inv, const double *a, const double *b, int dim);

// Pointwise symmetric positive-definite metric g_ij with cached sqrt(det g)
// and g^{ij}. Construction validates g11 > 0 and det g > 0 at every node and
// throws StateError otherwise.
class MetricField
{
public:
  explicit MetricField(SymTensorField g);

  static MetricField flat(const Grid &grid);
  static MetricField scaled(const Grid &grid, double c);
  // e^{2 u0} times the flat metric.
  static MetricField conformal(const ScalarField &u0);

  const Grid &grid() const { return g_.grid(); }
  const SymTensorField &tensor() const { return g_; }
  const SymMat &operator[](std::size_t k) const { return g_[k]; }
  const SymMat &inverse(std::size_t k) const { return inv_[k]; }
  double sqrt_det(std::size_t k) const { return sqrt_det_[k]; }
  std::span<const double> sqrt_det() const { return sqrt_det_; }
  double min_det() const;

  MetricField times(double c) const;
  MetricField shifted(int di, int dj) const { return MetricField(g_.shifted(di, dj)); }

private:
  SymTensorField g_;
  std::vector<double> sqrt_det_;
  std::vector<SymMat> inv_;
};

// One snapshot (g, phi, t) of the coupled Ricci-harmonic flow.
struct CoupledState
{
  MetricField g;
  ScalarField phi;
  double t = 0.0;
};

}  // namespace pqflow
