#include <algorithm>
#include <cmath>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"

namespace pqflow::diffgeo
{

FaceQuadrature::FaceQuadrature(const MetricField &g) : grid_(g.grid())
{
  const std::size_t N = grid_.size();
  const int dim = grid_.dim();
  east_.resize(N);
  west_.resize(N);
  north_.resize(N);
  south_.resize(N);
  ne_.resize(N);
  nw_.resize(N);
  se_.resize(N);
  for (std::size_t k = 0; k < N; ++k)
  {
    const int i = grid_.i_of(k), j = grid_.j_of(k);
    east_[k] = grid_.index(i + 1, j);
    west_[k] = grid_.index(i - 1, j);
    if (dim == 2)
    {
      north_[k] = grid_.index(i, j + 1);
      south_[k] = grid_.index(i, j - 1);
      ne_[k] = grid_.index(i + 1, j + 1);
      nw_[k] = grid_.index(i - 1, j + 1);
      se_[k] = grid_.index(i + 1, j - 1);
    }
  }

  const double cell = grid_.cell_volume();
  node_weight_.resize(N);
  for (std::size_t k = 0; k < N; ++k)
  {
    node_weight_[k] = g.sqrt_det(k) * cell;
  }
  for (int axis = 0; axis < dim; ++axis)
  {
    metric_[axis].resize(N);
    inverse_[axis].resize(N);
    weight_[axis].resize(N);
    for (std::size_t k = 0; k < N; ++k)
    {
      const SymMat gf = (g[k] + g[neighbor(axis, k)]) * 0.5;
      metric_[axis][k] = gf;
      inverse_[axis][k] = sym_inverse(gf, dim);
      weight_[axis][k] = std::sqrt(sym_det(gf, dim)) * cell / dim;
    }
  }
}

void FaceQuadrature::face_gradient(std::span<const double> f, int axis, std::size_t k,
                                   double G[2]) const
{
  const double hx = grid_.spacing(0);
  if (grid_.dim() == 1)
  {
    G[0] = (f[east_[k]] - f[k]) / hx;
    G[1] = 0.0;
    return;
  }
  const double hy = grid_.spacing(1);
  if (axis == 0)
  {
    G[0] = (f[east_[k]] - f[k]) / hx;
    G[1] = ((f[north_[k]] - f[south_[k]]) + (f[ne_[k]] - f[se_[k]])) / (4.0 * hy);
  }
  else
  {
    G[0] = ((f[east_[k]] - f[west_[k]]) + (f[ne_[k]] - f[nw_[k]])) / (4.0 * hx);
    G[1] = (f[north_[k]] - f[k]) / hy;
  }
}

void FaceQuadrature::scatter(int axis, std::size_t k, const double F[2],
                             std::span<double> out) const
{
  const double hx = grid_.spacing(0);
  if (grid_.dim() == 1)
  {
    out[east_[k]] += F[0] / hx;
    out[k] -= F[0] / hx;
    return;
  }
  const double hy = grid_.spacing(1);
  if (axis == 0)
  {
    out[east_[k]] += F[0] / hx;
    out[k] -= F[0] / hx;
    const double c = F[1] / (4.0 * hy);
    out[north_[k]] += c;
    out[south_[k]] -= c;
    out[ne_[k]] += c;
    out[se_[k]] -= c;
  }
  else
  {
    out[north_[k]] += F[1] / hy;
    out[k] -= F[1] / hy;
    const double c = F[0] / (4.0 * hx);
    out[east_[k]] += c;
    out[west_[k]] -= c;
    out[ne_[k]] += c;
    out[nw_[k]] -= c;
  }
}

double pow_half(double s, double p)
{
  if (p == 2.0)
  {
    return s;
  }
  if (p == 4.0)
  {
    return s * s;
  }
  return std::pow(s, 0.5 * p);
}

namespace
{

// (s + delta^2)^{(p-2)/2}
double flux_coefficient(double s, double p, double delta)
{
  if (p == 2.0)
  {
    return 1.0;
  }
  const double r = s + delta * delta;
  if (p == 4.0)
  {
    return r;
  }
  if (r == 0.0)
  {
    // Only reachable for p < 2 with delta = 0; the flux itself is zero there.
    return 0.0;
  }
  return std::pow(r, 0.5 * (p - 2.0));
}

}  // namespace

double gradient_power_integral(const FaceQuadrature &fq, std::span<const double> f, double p)
{
  const int dim = fq.dim();
  double sum = 0.0;
  double G[2];
  for (int axis = 0; axis < dim; ++axis)
  {
    for (std::size_t k = 0; k < fq.size(); ++k)
    {
      fq.face_gradient(f, axis, k, G);
      const double s = sym_contract(fq.inverse(axis, k), G, G, dim);
      sum += fq.weight(axis, k) * pow_half(s, p);
    }
  }
  return sum;
}

void weak_p_laplacian(const FaceQuadrature &fq, std::span<const double> f, double p, double delta,
                      std::span<double> out)
{
  const int dim = fq.dim();
  std::fill(out.begin(), out.end(), 0.0);
  double G[2], F[2];
  for (int axis = 0; axis < dim; ++axis)
  {
    for (std::size_t k = 0; k < fq.size(); ++k)
    {
      fq.face_gradient(f, axis, k, G);
      const SymMat &inv = fq.inverse(axis, k);
      const double s = sym_contract(inv, G, G, dim);
      const double wc = fq.weight(axis, k) * flux_coefficient(s, p, delta);
      if (dim == 1)
      {
        F[0] = wc * inv.xx * G[0];
        F[1] = 0.0;
      }
      else
      {
        F[0] = wc * (inv.xx * G[0] + inv.xy * G[1]);
        F[1] = wc * (inv.xy * G[0] + inv.yy * G[1]);
      }
      fq.scatter(axis, k, F, out);
    }
  }
}

std::array<std::vector<double>, 2> partials(const ScalarField &f)
{
  const Grid &grid = f.grid();
  const std::size_t N = grid.size();
  std::array<std::vector<double>, 2> d{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  const double hx = grid.spacing(0);
  for (std::size_t k = 0; k < N; ++k)
  {
    const int i = grid.i_of(k), j = grid.j_of(k);
    d[0][k] = (f[grid.index(i + 1, j)] - f[grid.index(i - 1, j)]) / (2.0 * hx);
    if (grid.dim() == 2)
    {
      const double hy = grid.spacing(1);
      d[1][k] = (f[grid.index(i, j + 1)] - f[grid.index(i, j - 1)]) / (2.0 * hy);
    }
  }
  return d;
}

VectorField gradient(const ScalarField &f, const MetricField &g)
{
  require_same_grid(f.grid(), g.grid(), "gradient");
  const auto d = partials(f);
  const std::size_t N = f.size();
  std::array<std::vector<double>, 2> up{std::vector<double>(N), std::vector<double>(N, 0.0)};
  for (std::size_t k = 0; k < N; ++k)
  {
    const SymMat &inv = g.inverse(k);
    if (f.grid().dim() == 1)
    {
      up[0][k] = inv.xx * d[0][k];
    }
    else
    {
      up[0][k] = inv.xx * d[0][k] + inv.xy * d[1][k];
      up[1][k] = inv.xy * d[0][k] + inv.yy * d[1][k];
    }
  }
  return VectorField(f.grid(), std::move(up));
}

ScalarField gradient_norm_sq(const ScalarField &f, const MetricField &g)
{
  require_same_grid(f.grid(), g.grid(), "gradient_norm_sq");
  const auto d = partials(f);
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < out.size(); ++k)
  {
    const double a[2] = {d[0][k], d[1][k]};
    out[k] = sym_contract(g.inverse(k), a, a, f.grid().dim());
  }
  return ScalarField(f.grid(), std::move(out));
}

ScalarField p_laplacian(const ScalarField &f, const MetricField &g, double p, double delta)
{
  require_same_grid(f.grid(), g.grid(), "p_laplacian");
  if (!(p > 1.0))
  {
    throw ParameterError("p-Laplacian requires p > 1");
  }
  if (!(delta >= 0.0))
  {
    throw ParameterError("p-Laplacian regularizer must be non-negative");
  }
  const FaceQuadrature fq(g);
  std::vector<double> out(f.size());
  weak_p_laplacian(fq, f.values(), p, delta, out);
  const auto W = fq.node_weight();
  for (std::size_t k = 0; k < out.size(); ++k)
  {
    out[k] = -out[k] / W[k];
  }
  return ScalarField(f.grid(), std::move(out));
}

ScalarField laplace_beltrami(const ScalarField &f, const MetricField &g)
{
  return p_laplacian(f, g, 2.0, 0.0);
}

double integrate(const ScalarField &f, const MetricField &g)
{
  require_same_grid(f.grid(), g.grid(), "integrate");
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    sum += f[k] * g.sqrt_det(k);
  }
  return sum * f.grid().cell_volume();
}

double volume(const MetricField &g)
{
  double sum = 0.0;
  for (double s : g.sqrt_det())
  {
    sum += s;
  }
  return sum * g.grid().cell_volume();
}

ScalarField tension_field(const CoupledState &state)
{
  return laplace_beltrami(state.phi, state.g);
}

std::array<double, 2> generalized_eigenvalues(const SymMat &T, const SymMat &g, int dim)
{
  if (dim == 1)
  {
    const double mu = T.xx / g.xx;
    return {mu, mu};
  }
  // g = L L^T; the roots are the eigenvalues of L^{-1} T L^{-T}.
  const double l11 = std::sqrt(g.xx);
  const double l21 = g.xy / l11;
  const double l22 = std::sqrt(g.yy - l21 * l21);
  const double A = T.xx / (l11 * l11);
  const double B = (T.xy - l21 * A * l11) / (l11 * l22);
  const double C = (T.yy - 2.0 * l21 * T.xy / l11 + l21 * l21 * A) / (l22 * l22);
  const double mean = 0.5 * (A + C);
  const double radius = std::hypot(0.5 * (A - C), B);
  return {mean - radius, mean + radius};
}

double min_generalized_eigenvalue(const SymMat &T, const SymMat &g, int dim)
{
  return generalized_eigenvalues(T, g, dim)[0];
}

}  // namespace pqflow::diffgeo
