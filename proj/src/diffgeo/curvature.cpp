#include <cmath>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"

namespace pqflow::diffgeo
{

namespace
{

double det3(const double m[3][3])
{
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

Curvature ricci_and_scalar(const MetricField &g)
{
  const Grid &grid = g.grid();
  const std::size_t N = grid.size();
  if (grid.dim() == 1)
  {
    return {SymTensorField(grid, std::vector<SymMat>(N)), ScalarField::constant(grid, 0.0)};
  }
  if (!(g.min_det() > 0.0))
  {
    throw StateError("curvature of a degenerate metric");
  }

  const double hx = grid.spacing(0), hy = grid.spacing(1);
  std::vector<SymMat> ric(N);
  std::vector<double> R(N);
  for (std::size_t k = 0; k < N; ++k)
  {
    const int i = grid.i_of(k), j = grid.j_of(k);
    const SymMat &c = g[k];
    const SymMat &e = g[grid.index(i + 1, j)];
    const SymMat &w = g[grid.index(i - 1, j)];
    const SymMat &n = g[grid.index(i, j + 1)];
    const SymMat &s = g[grid.index(i, j - 1)];
    const SymMat &ne = g[grid.index(i + 1, j + 1)];
    const SymMat &nw = g[grid.index(i - 1, j + 1)];
    const SymMat &se = g[grid.index(i + 1, j - 1)];
    const SymMat &sw = g[grid.index(i - 1, j - 1)];

    // First fundamental form notation: E = g11, F = g12, G = g22 in (u, v) = (x, y).
    const double E = c.xx, F = c.xy, G = c.yy;
    const double E_u = (e.xx - w.xx) / (2 * hx), E_v = (n.xx - s.xx) / (2 * hy);
    const double F_u = (e.xy - w.xy) / (2 * hx), F_v = (n.xy - s.xy) / (2 * hy);
    const double G_u = (e.yy - w.yy) / (2 * hx), G_v = (n.yy - s.yy) / (2 * hy);
    const double E_vv = (n.xx - 2 * c.xx + s.xx) / (hy * hy);
    const double G_uu = (e.yy - 2 * c.yy + w.yy) / (hx * hx);
    const double F_uv = (ne.xy - nw.xy - se.xy + sw.xy) / (4 * hx * hy);

    const double m1[3][3] = {{-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v},
                             {F_v - 0.5 * G_u, E, F},
                             {0.5 * G_v, F, G}};
    const double m2[3][3] = {{0.0, 0.5 * E_v, 0.5 * G_u}, {0.5 * E_v, E, F}, {0.5 * G_u, F, G}};
    const double det = E * G - F * F;
    const double K = (det3(m1) - det3(m2)) / (det * det);
    R[k] = 2.0 * K;
    ric[k] = c * K;
  }
  return {SymTensorField(grid, std::move(ric)), ScalarField(grid, std::move(R))};
}

ScalarField conformal_scalar_curvature(const ScalarField &u0)
{
  const Grid &grid = u0.grid();
  if (grid.dim() == 1)
  {
    return ScalarField::constant(grid, 0.0);
  }
  const double hx = grid.spacing(0), hy = grid.spacing(1);
  std::vector<double> R(grid.size());
  for (std::size_t k = 0; k < R.size(); ++k)
  {
    const int i = grid.i_of(k), j = grid.j_of(k);
    const double lap = (u0[grid.index(i + 1, j)] - 2 * u0[k] + u0[grid.index(i - 1, j)]) / (hx * hx) +
                       (u0[grid.index(i, j + 1)] - 2 * u0[k] + u0[grid.index(i, j - 1)]) / (hy * hy);
    R[k] = -2.0 * std::exp(-2.0 * u0[k]) * lap;
  }
  return ScalarField(grid, std::move(R));
}

CouplingTensors coupling_tensors(const CoupledState &state, double kappa)
{
  require_same_grid(state.g.grid(), state.phi.grid(), "coupling_tensors");
  const Grid &grid = state.g.grid();
  const int dim = grid.dim();
  auto curv = ricci_and_scalar(state.g);
  const auto d = partials(state.phi);
  std::vector<SymMat> coupled(grid.size());
  std::vector<double> trace(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const double a[2] = {d[0][k], d[1][k]};
    const SymMat dd = dim == 1 ? SymMat{a[0] * a[0], 0.0, 0.0}
                               : SymMat{a[0] * a[0], a[0] * a[1], a[1] * a[1]};
    coupled[k] = curv.ricci[k] - dd * kappa;
    trace[k] = curv.scalar[k] - kappa * sym_contract(state.g.inverse(k), a, a, dim);
  }
  return {SymTensorField(grid, std::move(coupled)), ScalarField(grid, std::move(trace))};
}

}  // namespace pqflow::diffgeo
