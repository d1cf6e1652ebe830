#include "pqflow/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pqflow/errors.hpp"

namespace pqflow
{

double sym_det(const SymMat &g, int dim)
{
  return dim == 1 ? g.xx : g.xx * g.yy - g.xy * g.xy;
}

SymMat sym_inverse(const SymMat &g, int dim)
{
  if (dim == 1)
  {
    return {1.0 / g.xx, 0.0, 0.0};
  }
  const double det = sym_det(g, 2);
  return {g.yy / det, -g.xy / det, g.xx / det};
}

double sym_contract(const SymMat &inv, const double *a, const double *b, int dim)
{
  if (dim == 1)
  {
    return inv.xx * a[0] * b[0];
  }
  return inv.xx * a[0] * b[0] + inv.xy * (a[0] * b[1] + a[1] * b[0]) + inv.yy * a[1] * b[1];
}

MetricField::MetricField(SymTensorField g) : g_(std::move(g))
{
  const int dim = g_.grid().dim();
  sqrt_det_.resize(g_.size());
  inv_.resize(g_.size());
  for (std::size_t k = 0; k < g_.size(); ++k)
  {
    const double det = sym_det(g_[k], dim);
    if (!(g_[k].xx > 0.0) || !(det > 0.0))
    {
      std::ostringstream msg;
      msg << "metric is not positive definite at node " << k << " (g11 = " << g_[k].xx
          << ", det = " << det << ")";
      throw StateError(msg.str());
    }
    sqrt_det_[k] = std::sqrt(det);
    inv_[k] = sym_inverse(g_[k], dim);
  }
}

MetricField MetricField::flat(const Grid &grid)
{
  return scaled(grid, 1.0);
}

MetricField MetricField::scaled(const Grid &grid, double c)
{
  const SymMat e = grid.dim() == 1 ? SymMat{c, 0.0, 0.0} : SymMat{c, 0.0, c};
  return MetricField(SymTensorField(grid, std::vector<SymMat>(grid.size(), e)));
}

MetricField MetricField::conformal(const ScalarField &u0)
{
  const Grid &grid = u0.grid();
  std::vector<SymMat> g(grid.size());
  for (std::size_t k = 0; k < g.size(); ++k)
  {
    const double e = std::exp(2.0 * u0[k]);
    g[k] = grid.dim() == 1 ? SymMat{e, 0.0, 0.0} : SymMat{e, 0.0, e};
  }
  return MetricField(SymTensorField(grid, std::move(g)));
}

double MetricField::min_det() const
{
  double m = std::numeric_limits<double>::infinity();
  for (double s : sqrt_det_)
  {
    m = std::min(m, s * s);
  }
  return m;
}

MetricField MetricField::times(double c) const
{
  std::vector<SymMat> g(g_.values().begin(), g_.values().end());
  for (auto &v : g)
  {
    v = v * c;
  }
  return MetricField(SymTensorField(grid(), std::move(g)));
}

}  // namespace pqflow
