#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "oracles/circle_oracle.hpp"
#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"
#include "pqflow/pqeigen.hpp"

using namespace pqflow;
using namespace pqflow::pqeigen;
using std::numbers::pi;

namespace
{

const double two_pi = 2.0 * pi;

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

// Smallest nonzero eigenvalue of K x = mu W x, where K is the matrix of the
// discrete Dirichlet energy and W the node weights. Columns of K come from
// applying the weak Laplacian to unit vectors.
double dense_first_eigenvalue(const MetricField &g)
{
  const diffgeo::FaceQuadrature fq(g);
  const auto N = Eigen::Index(g.grid().size());
  Eigen::MatrixXd K(N, N);
  std::vector<double> e(N, 0.0), col(N);
  for (Eigen::Index j = 0; j < N; ++j)
  {
    e[j] = 1.0;
    diffgeo::weak_p_laplacian(fq, e, 2.0, 0.0, col);
    e[j] = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
    {
      K(i, j) = col[i];
    }
  }
  K = 0.5 * (K + K.transpose()).eval();
  Eigen::VectorXd w(N);
  for (Eigen::Index i = 0; i < N; ++i)
  {
    w(i) = fq.node_weight()[i];
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, w.asDiagonal().toDenseMatrix());
  // The first eigenvalue belongs to the constants.
  return solver.eigenvalues()(1);
}

EigenParams tight(EigenParams p)
{
  p.tol_kkt = 1e-8;
  return p;
}

}  // namespace

TEST_CASE("exponent relation")
{
  const auto p44 = EigenParams::from_pqa(4, 4, 1);
  CHECK(p44.b == 1.0);
  CHECK(EigenParams::from_pqa(2, 2, 0).b == 0.0);
  CHECK(EigenParams::from_pqa(3, 6, 1).b == doctest::Approx(1.0));
  CHECK_THROWS_AS(EigenParams::from_pqa(2, 2, 1), ParameterError);
  CHECK_THROWS_AS(EigenParams::from_pqa(1, 2, 0), ParameterError);
  EigenParams bad = p44;
  bad.b = 1.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK(p44.k() == 4.0);
}

TEST_CASE("functionals A and B")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto g = MetricField::flat(grid);
  const auto params = EigenParams::from_pqa(4, 4, 1);
  const auto c = ScalarField::constant(grid, 2.0);
  CHECK(functional_A(c, c, g, params) == 0.0);

  const auto s = ScalarField::from_function(grid, [](double x, double) { return std::sin(x); });
  const auto fine_grid = Grid::torus(256, two_pi, two_pi);
  const auto sf = ScalarField::from_function(fine_grid, [](double x, double) { return std::sin(x); });
  CHECK(functional_A(sf, sf, MetricField::flat(fine_grid), params) ==
        doctest::Approx(3.0 / 8.0 * 4 * pi * pi).epsilon(5e-4));

  const auto lin = EigenParams::from_pqa(2, 2, 0);
  CHECK(functional_A(s, s, g, lin) ==
        doctest::Approx(diffgeo::gradient_power_integral(diffgeo::FaceQuadrature(g), s.values(), 2.0)));

  // u = v: B integrates |u|^{a+b+2}.
  double direct = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    direct += std::pow(std::abs(s[k]), 4.0) * grid.cell_volume();
  }
  CHECK(functional_B(s, s, g, params) == doctest::Approx(direct).epsilon(1e-14));

  // Circle, u = sin x, v = sin 2x, a = b = 1: compare against a fine
  // trapezoid rule; the integrand is odd about pi/2 so both vanish.
  const auto circle = Grid::circle(256, two_pi);
  const auto cu = ScalarField::from_function(circle, [](double x, double) { return std::sin(x); });
  const auto cv = ScalarField::from_function(circle, [](double x, double) { return std::sin(2 * x); });
  double fine = 0.0;
  const int M = 100000;
  for (int i = 0; i < M; ++i)
  {
    const double x = two_pi * i / M;
    fine += std::abs(std::sin(x)) * std::abs(std::sin(2 * x)) * std::sin(x) * std::sin(2 * x) * two_pi / M;
  }
  const double B = functional_B(cu, cv, MetricField::flat(circle), params);
  CHECK(std::abs(B - fine) < 1e-12);

  // Homogeneity B(s u, t v) = s^{a+1} t^{b+1} B(u, v).
  const auto u = ScalarField::from_function(grid, [](double x, double y) { return std::sin(x) + 0.3 * std::cos(y); });
  const auto v = ScalarField::from_function(grid, [](double x, double y) { return std::sin(x + y) + 0.5; });
  const auto u2 = ScalarField::from_function(grid, [](double x, double y) { return 1.5 * (std::sin(x) + 0.3 * std::cos(y)); });
  const auto v2 = ScalarField::from_function(grid, [](double x, double y) { return 0.7 * (std::sin(x + y) + 0.5); });
  CHECK(functional_B(u2, v2, g, params) ==
        doctest::Approx(1.5 * 1.5 * 0.7 * 0.7 * functional_B(u, v, g, params)).epsilon(1e-12));
}

TEST_CASE("zero-mean constraints")
{
  const auto circle = Grid::circle(64, two_pi);
  const auto g = MetricField::flat(circle);
  const auto params = EigenParams::from_pqa(4, 4, 1);
  const auto s = ScalarField::from_function(circle, [](double x, double) { return std::sin(x); });
  const auto [cu, cv] = zero_mean_constraints(s, s, g, params);
  CHECK(std::abs(cu) < 1e-14);
  CHECK(std::abs(cv) < 1e-14);
  const auto c = ScalarField::constant(circle, 2.0);
  const auto [ku, kv] = zero_mean_constraints(c, c, g, params);
  CHECK(ku == doctest::Approx(8.0 * two_pi));
  CHECK(kv == doctest::Approx(8.0 * two_pi));
}

TEST_CASE("KKT residual of the exact linear eigenfunction")
{
  const auto grid = Grid::torus(64, two_pi, two_pi);
  const auto g = MetricField::flat(grid);
  const auto params = EigenParams::from_pqa(2, 2, 0);
  const double s = 1.0 / std::sqrt(2 * pi * pi);
  const auto u = ScalarField::from_function(grid, [&](double x, double) { return s * std::sin(x); });
  CHECK(functional_B(u, u, g, params) == doctest::Approx(1.0).epsilon(1e-12));
  const double h = grid.spacing(0);
  CHECK(kkt_residual(1.0, u, u, g, params) < h * h);
  const auto c = ScalarField::constant(grid, 1.0);
  CHECK(kkt_residual(0.0, c, c, g, params) == 0.0);
}

TEST_CASE("linear case on the flat torus")
{
  const auto grid = Grid::torus(32, two_pi, two_pi);
  const auto g = MetricField::flat(grid);
  const auto params = tight(EigenParams::from_pqa(2, 2, 0));
  const auto pair = first_eigenpair(g, params);
  REQUIRE(pair.converged);
  CHECK(pair.lambda == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(pair.constraints.normalization <= 1e-10);
  CHECK(pair.constraints.mean_u <= 1e-8);
  CHECK(pair.constraints.mean_v <= 1e-8);
  CHECK(std::abs(pair.lambda - functional_A(pair.u, pair.v, g, params)) <= 1e-10);
  CHECK(kkt_residual(pair, g, params) == doctest::Approx(pair.kkt_residual).epsilon(1e-10));
}

TEST_CASE("dense generalized eigensolve agrees on a curved metric")
{
  const auto grid = Grid::torus(12, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto pair = first_eigenpair(g, tight(EigenParams::from_pqa(2, 2, 0)));
  REQUIRE(pair.converged);
  CHECK(pair.lambda == doctest::Approx(dense_first_eigenvalue(g)).epsilon(1e-7));
}

TEST_CASE("component identities and symmetric reduction")
{
  const auto grid = Grid::torus(16, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto params = EigenParams::from_pqa(4, 4, 1);
  const auto pair = first_eigenpair(g, params);
  REQUIRE(pair.converged);
  const diffgeo::FaceQuadrature fq(g);
  const double P = diffgeo::gradient_power_integral(fq, pair.u.values(), 4.0);
  const double Q = diffgeo::gradient_power_integral(fq, pair.v.values(), 4.0);
  CHECK(std::abs(P - pair.lambda) <= 10 * params.tol_kkt * pair.lambda);
  CHECK(std::abs(Q - pair.lambda) <= 10 * params.tol_kkt * pair.lambda);
  double diff = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    diff = std::max(diff, std::abs(pair.u[k] - pair.v[k]));
  }
  CHECK(diff <= 1e-9);
}

TEST_CASE("unequal exponents")
{
  const auto circle = Grid::circle(64, two_pi);
  const auto params = EigenParams::from_pqa(3, 6, 1);
  const auto pair = first_eigenpair(MetricField::flat(circle), params);
  REQUIRE(pair.converged);
  CHECK(pair.lambda > 0.0);
  CHECK(pair.constraints.normalization <= 1e-10);
  CHECK(pair.constraints.mean_u <= 1e-8);
  CHECK(pair.constraints.mean_v <= 1e-8);
}

TEST_CASE("scaling law for p = q")
{
  const auto grid = Grid::torus(16, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  for (double p : {2.0, 4.0})
  {
    const auto params = tight(EigenParams::from_pqa(p, p, p / 2 - 1));
    const double base = first_eigenpair(g, params).lambda;
    const double scaled = first_eigenpair(g.times(2.0), params).lambda * std::pow(2.0, p / 2);
    CHECK(scaled == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("determinism and warm starts")
{
  const auto grid = Grid::torus(16, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  const auto params = EigenParams::from_pqa(4, 4, 1);
  const auto a = first_eigenpair(g, params);
  const auto b = first_eigenpair(g, params);
  CHECK(a.lambda == b.lambda);
  CHECK(a.iterations == b.iterations);
  const auto warm = first_eigenpair(g, params, WarmStart{a.u, a.v});
  CHECK(warm.lambda == doctest::Approx(a.lambda).epsilon(1e-10));
  CHECK(warm.iterations <= 2);

  CoupledState state{g, ScalarField::constant(grid, 0.0), 0.0};
  std::optional<WarmStart> ws;
  const double l1 = lambda_of_t(state, params, &ws);
  REQUIRE(ws.has_value());
  CHECK(lambda_of_t(state, params, &ws) == doctest::Approx(l1).epsilon(1e-10));
}

TEST_CASE("other initializations reach the same eigenvalue")
{
  const auto grid = Grid::torus(16, two_pi, two_pi);
  const auto g = wobbly_metric(grid);
  auto params = tight(EigenParams::from_pqa(2, 2, 0));
  const double ref = first_eigenpair(g, params).lambda;
  params.init = InitMode::Random;
  params.seed = 42;
  CHECK(first_eigenpair(g, params).lambda == doctest::Approx(ref).epsilon(1e-6));
  CHECK(parse_init_mode("random") == InitMode::Random);
  CHECK(to_string(InitMode::LowestModes) == "lowest_modes");
  CHECK_THROWS_AS(parse_init_mode("bogus"), ParameterError);
}

TEST_CASE("mismatched warm start is a structural error")
{
  const auto g = MetricField::flat(Grid::circle(16, two_pi));
  const auto other = Grid::circle(32, two_pi);
  const auto f = ScalarField::constant(other, 1.0);
  CHECK_THROWS_AS(first_eigenpair(g, EigenParams{}, WarmStart{f, f}), StructuralError);
}

TEST_CASE("nonlinear circle against the independent oracle")
{
  const auto oracle = oracle::circle_p_quotient(1024, two_pi, 4.0);
  CHECK(oracle.converged);
  // Continuous value (pi_p / pi)^p = 2^p (p - 1) / (p sin(pi/p))^p = 3/4 for p = 4.
  CHECK(oracle.quotient == doctest::Approx(0.75).epsilon(1e-3));
  const auto pair = first_eigenpair(MetricField::flat(Grid::circle(128, two_pi)), EigenParams::from_pqa(4, 4, 1));
  REQUIRE(pair.converged);
  CHECK(pair.lambda == doctest::Approx(oracle.quotient).epsilon(1e-2));
}
