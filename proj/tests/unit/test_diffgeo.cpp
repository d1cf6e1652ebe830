#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"

using namespace pqflow;
using namespace pqflow::diffgeo;
using std::numbers::pi;

namespace
{

const double two_pi = 2.0 * pi;

double max_err(const ScalarField &f, const std::function<double(double, double)> &exact)
{
  double e = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    e = std::max(e, std::abs(f[k] - exact(f.grid().x(k), f.grid().y(k))));
  }
  return e;
}

MetricField wobbly_metric(const Grid &grid)
{
  std::vector<SymMat> g(grid.size());
  for (std::size_t k = 0; k < g.size(); ++k)
  {
    const double x = grid.x(k), y = grid.y(k);
    g[k] = {1.0 + 0.3 * std::cos(x) * std::sin(y), 0.2 * std::sin(x + y), 1.2 + 0.25 * std::sin(2 * x)};
  }
  return MetricField(SymTensorField(grid, std::move(g)));
}

ScalarField random_smooth(const Grid &grid, unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> c(-1, 1);
  const double a1 = c(rng), a2 = c(rng), a3 = c(rng), a4 = c(rng);
  return ScalarField::from_function(grid, [&](double x, double y)
                                    { return a1 * std::sin(x) + a2 * std::cos(2 * y) +
                                             a3 * std::sin(x + y) + a4 * std::cos(3 * x - y); });
}

}  // namespace

TEST_CASE("grid validation and periodic indexing")
{
  CHECK_THROWS_AS(Grid(3, 16, 1.0), ParameterError);
  CHECK_THROWS_AS(Grid(2, 4, 1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(Grid(1, 16, -1.0), ParameterError);
  const auto grid = Grid::torus(8, 1.0, 2.0);
  CHECK(grid.index(-1, 0) == 7);
  CHECK(grid.index(8, 9) == grid.index(0, 1));
  CHECK(grid.spacing(1) == doctest::Approx(0.25));
}

TEST_CASE("fields reject non-finite values and mismatched grids")
{
  const auto grid = Grid::circle(16, two_pi);
  std::vector<double> bad(16, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(ScalarField(grid, bad), StateError);
  const auto other = Grid::circle(32, two_pi);
  CHECK_THROWS_AS(laplace_beltrami(ScalarField::constant(other, 1.0), MetricField::flat(grid)),
                  StructuralError);
}

TEST_CASE("metric must be positive definite")
{
  const auto grid = Grid::torus(8, two_pi, two_pi);
  std::vector<SymMat> g(grid.size(), SymMat{1.0, 0.0, 1.0});
  g[5] = {1.0, 2.0, 1.0};
  CHECK_THROWS_AS(MetricField(SymTensorField(grid, g)), StateError);
  g[5] = {-1.0, 0.0, -1.0};
  CHECK_THROWS_AS(MetricField(SymTensorField(grid, g)), StateError);
}

TEST_CASE("gradient")
{
  const auto circle = Grid::circle(64, two_pi);
  const auto c = ScalarField::constant(circle, 3.0);
  const auto gc = gradient(c, MetricField::flat(circle));
  for (std::size_t k = 0; k < circle.size(); ++k)
  {
    CHECK(gc(0, k) == 0.0);
  }

  const auto s = ScalarField::from_function(circle, [](double x, double) { return std::sin(x); });
  const auto gs = gradient(s, MetricField::flat(circle));
  double err = 0.0;
  for (std::size_t k = 0; k < circle.size(); ++k)
  {
    err = std::max(err, std::abs(gs(0, k) - std::cos(circle.x(k))));
  }
  CHECK(err < 2e-3);

  // g = 4 * flat: g^{11} = 1/4, so |grad sin|^2 = cos^2 / 4.
  const auto n2 = gradient_norm_sq(s, MetricField::scaled(circle, 4.0));
  double h = circle.spacing(0);
  double exact_err = max_err(n2, [](double x, double) { return std::cos(x) * std::cos(x) / 4.0; });
  CHECK(exact_err < h * h);
}

TEST_CASE("Laplace-Beltrami")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto flat = MetricField::flat(grid);
  const double h = grid.spacing(0);
  CHECK(laplace_beltrami(ScalarField::constant(grid, 2.5), flat).max_abs() == 0.0);

  const auto s = ScalarField::from_function(grid, [](double x, double) { return std::sin(x); });
  CHECK(max_err(laplace_beltrami(s, flat), [](double x, double) { return -std::sin(x); }) < 0.5 * h * h);

  // Conformal identity: Delta_g f = e^{-2 u0} Delta_flat f with u0 = 0.1 cos x, f = sin y.
  const auto u0 = ScalarField::from_function(grid, [](double x, double) { return 0.1 * std::cos(x); });
  const auto f = ScalarField::from_function(grid, [](double, double y) { return std::sin(y); });
  const auto lap = laplace_beltrami(f, MetricField::conformal(u0));
  CHECK(max_err(lap, [](double x, double y)
                { return -std::exp(-0.2 * std::cos(x)) * std::sin(y); }) < 3e-3);
}

TEST_CASE("p-Laplacian")
{
  const auto grid = Grid::torus(32, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto f = random_smooth(grid, 7);
  const auto l2 = p_laplacian(f, g, 2.0, 0.3);
  const auto lb = laplace_beltrami(f, g);
  double d = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    d = std::max(d, std::abs(l2[k] - lb[k]));
  }
  CHECK(d <= 1e-12 * (1.0 + lb.max_abs()));
  CHECK(p_laplacian(ScalarField::constant(grid, 1.0), g, 3.0, 1e-8).max_abs() == 0.0);
  CHECK_THROWS_AS(p_laplacian(f, g, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(p_laplacian(f, g, 3.0, -1.0), ParameterError);

  // 1D, p = 4: Delta_4 sin = 3 cos^2 x (-sin x).
  const auto circle = Grid::circle(256, two_pi);
  const auto s = ScalarField::from_function(circle, [](double x, double) { return std::sin(x); });
  const auto l4 = p_laplacian(s, MetricField::flat(circle), 4.0, 0.0);
  CHECK(max_err(l4, [](double x, double) { return -3.0 * std::cos(x) * std::cos(x) * std::sin(x); }) <
        5e-4);
}

TEST_CASE("discrete divergence theorem for every p")
{
  const auto grid = Grid::torus(32, two_pi, 3.0);
  const auto g = wobbly_metric(grid);
  const double vol = volume(g);
  for (unsigned seed = 1; seed <= 4; ++seed)
  {
    const auto f = random_smooth(grid, seed);
    for (double p : {1.5, 2.0, 3.0, 4.0})
    {
      const double total = integrate(p_laplacian(f, g, p, 1e-8), g);
      CHECK(std::abs(total) <= 1e-10 * f.max_abs() * vol);
    }
  }
}

TEST_CASE("integration")
{
  const auto grid = Grid::torus(32, two_pi, two_pi);
  CHECK(volume(MetricField::flat(grid)) == doctest::Approx(4 * pi * pi).epsilon(1e-14));
  const auto s = ScalarField::from_function(grid, [](double x, double) { return std::sin(x); });
  CHECK(std::abs(integrate(s, MetricField::flat(grid))) < 1e-12);
  CHECK(volume(MetricField::scaled(grid, 3.0)) == doctest::Approx(3 * 4 * pi * pi).epsilon(1e-14));
}

TEST_CASE("curvature")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto flat = ricci_and_scalar(MetricField::flat(grid));
  CHECK(flat.scalar.max_abs() == 0.0);

  const auto u0 = ScalarField::from_function(grid, [](double x, double) { return 0.2 * std::cos(x); });
  const auto g = MetricField::conformal(u0);
  const auto brioschi = ricci_and_scalar(g).scalar;
  const auto conformal = conformal_scalar_curvature(u0);
  // Exact: R = -2 e^{-2u0} Delta u0 = 0.4 cos x e^{-0.4 cos x}.
  auto exact = [](double x, double) { return 0.4 * std::cos(x) * std::exp(-0.4 * std::cos(x)); };
  CHECK(max_err(brioschi, exact) < 2e-3);
  CHECK(max_err(conformal, exact) < 2e-3);

  // Ricci is scale-invariant in 2D; R scales as 1/c.
  const auto gw = wobbly_metric(grid);
  const auto c1 = ricci_and_scalar(gw);
  const auto c3 = ricci_and_scalar(gw.times(3.0));
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    CHECK(c3.scalar[k] == doctest::Approx(c1.scalar[k] / 3.0).epsilon(1e-10));
    CHECK(c3.ricci[k].xy == doctest::Approx(c1.ricci[k].xy).epsilon(1e-10));
  }

  const auto circle = Grid::circle(16, 1.0);
  CHECK(ricci_and_scalar(MetricField::scaled(circle, 2.0)).scalar.max_abs() == 0.0);
}

TEST_CASE("curvature stencils converge at second order")
{
  double prev_b = 0.0, prev_c = 0.0;
  for (int n : {16, 32, 64})
  {
    const auto grid = Grid::torus(n, two_pi, two_pi);
    const auto u0 =
      ScalarField::from_function(grid, [](double x, double y) { return 0.2 * std::cos(x) + 0.1 * std::sin(y); });
    auto ex = [&](double x, double y)
    {
      // R = -2 e^{-2u0} Delta u0 with Delta u0 = -0.2 cos x - 0.1 sin y.
      const double u = 0.2 * std::cos(x) + 0.1 * std::sin(y);
      return 2.0 * std::exp(-2.0 * u) * (0.2 * std::cos(x) + 0.1 * std::sin(y));
    };
    const double eb = max_err(ricci_and_scalar(MetricField::conformal(u0)).scalar, ex);
    const double ec = max_err(conformal_scalar_curvature(u0), ex);
    if (prev_b > 0.0)
    {
      CHECK(prev_b / eb >= 3.5);
      CHECK(prev_c / ec >= 3.5);
    }
    prev_b = eb;
    prev_c = ec;
  }
}

TEST_CASE("coupling tensors")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto flat = MetricField::flat(grid);
  const auto phi = ScalarField::from_function(grid, [](double x, double) { return std::sin(x); });
  const auto ct = coupling_tensors({flat, phi, 0.0}, 1.0);
  double h = grid.spacing(0);
  CHECK(max_err(ct.trace, [](double x, double) { return -std::cos(x) * std::cos(x); }) < h * h);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    CHECK(ct.coupled[k].xx == doctest::Approx(ct.trace[k]).epsilon(1e-14));
    CHECK(ct.coupled[k].xy == 0.0);
    CHECK(ct.coupled[k].yy == 0.0);
  }

  // kappa = 0 and constant phi reduce to the Ricci terms.
  const auto g = wobbly_metric(grid);
  const auto curv = ricci_and_scalar(g);
  const auto r0 = coupling_tensors({g, phi, 0.0}, 0.0);
  const auto rc = coupling_tensors({g, ScalarField::constant(grid, 4.0), 0.0}, 2.0);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    CHECK(r0.trace[k] == curv.scalar[k]);
    CHECK(rc.coupled[k] == curv.ricci[k]);
  }
}

TEST_CASE("trace identity and homothety of the coupling tensors")
{
  const auto grid = Grid::torus(32, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto phi = random_smooth(grid, 11);
  const auto ct = coupling_tensors({g, phi, 0.0}, 0.7);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const SymMat &inv = g.inverse(k);
    const SymMat &T = ct.coupled[k];
    const double tr = inv.xx * T.xx + 2 * inv.xy * T.xy + inv.yy * T.yy;
    CHECK(std::abs(tr - ct.trace[k]) <= 1e-12 * (1.0 + std::abs(ct.trace[k])));
  }
  const auto cs = coupling_tensors({g.times(2.5), phi, 0.0}, 0.7);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    CHECK(cs.trace[k] == doctest::Approx(ct.trace[k] / 2.5).epsilon(1e-10));
    CHECK(cs.coupled[k].xx == doctest::Approx(ct.coupled[k].xx).epsilon(1e-10));
    CHECK(cs.coupled[k].xy == doctest::Approx(ct.coupled[k].xy).epsilon(1e-10));
    CHECK(cs.coupled[k].yy == doctest::Approx(ct.coupled[k].yy).epsilon(1e-10));
  }
}

TEST_CASE("cyclic shifts commute with the operators")
{
  const auto grid = Grid::torus(16, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto f = random_smooth(grid, 3);
  const auto lap = p_laplacian(f, g, 3.0, 1e-8);
  const auto lap_shift = p_laplacian(f.shifted(3, -2), g.shifted(3, -2), 3.0, 1e-8);
  const auto expected = lap.shifted(3, -2);
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    CHECK(lap_shift[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
  const auto R = ricci_and_scalar(g).scalar;
  const auto Rs = ricci_and_scalar(g.shifted(3, -2)).scalar;
  CHECK(Rs.min() == doctest::Approx(R.min()).epsilon(1e-12));
  CHECK(integrate(f.shifted(3, -2), g.shifted(3, -2)) == doctest::Approx(integrate(f, g)).epsilon(1e-12));
}

TEST_CASE("tension field is the Laplacian of phi")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto flat = MetricField::flat(grid);
  const double h = grid.spacing(0);
  CHECK(tension_field({flat, ScalarField::constant(grid, 1.0), 0.0}).max_abs() == 0.0);
  const auto phi = ScalarField::from_function(grid, [](double x, double) { return std::sin(x); });
  CHECK(max_err(tension_field({flat, phi, 0.0}), [](double x, double) { return -std::sin(x); }) < 0.5 * h * h);
}

TEST_CASE("generalized eigenvalues")
{
  // T = -diag(1, 0) + (1/4) I with respect to the identity.
  const auto mu = generalized_eigenvalues({-0.75, 0.0, 0.25}, {1.0, 0.0, 1.0}, 2);
  CHECK(mu[0] == doctest::Approx(-0.75));
  CHECK(mu[1] == doctest::Approx(0.25));
  // T = g gives both roots 1 for any SPD g.
  const SymMat g{2.0, 0.5, 1.0};
  const auto one = generalized_eigenvalues(g, g, 2);
  CHECK(one[0] == doctest::Approx(1.0));
  CHECK(one[1] == doctest::Approx(1.0));
  CHECK(min_generalized_eigenvalue({3.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, 1) == doctest::Approx(1.5));
}
