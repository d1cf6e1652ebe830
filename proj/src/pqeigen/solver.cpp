#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"
#include "pqflow/pqeigen.hpp"
#include "spectral_preconditioner.hpp"

namespace pqflow::pqeigen
{

namespace
{

using diffgeo::FaceQuadrature;

// |x|^a, with |0|^0 = 1 and |0|^a = 0 for a > 0.
inline double abs_pow(double x, double a)
{
  if (a == 0.0)
  {
    return 1.0;
  }
  if (a == 1.0)
  {
    return std::abs(x);
  }
  return std::pow(std::abs(x), a);
}

// d/dx |x|^a x = (a+1)|x|^a is the weight; this is d/dx |x|^a = a |x|^{a-1} sgn x,
// taken as zero at x = 0.
inline double abs_pow_derivative(double x, double a)
{
  if (a == 0.0 || x == 0.0)
  {
    return 0.0;
  }
  const double s = x > 0.0 ? 1.0 : -1.0;
  if (a == 1.0)
  {
    return s;
  }
  return a * std::pow(std::abs(x), a - 1.0) * s;
}

double dot(std::span<const double> x, std::span<const double> y)
{
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    s += x[i] * y[i];
  }
  return s;
}

struct Evaluation
{
  double P = 0.0;  // int |grad u|^p
  double Q = 0.0;  // int |grad v|^q
  double B = 0.0;
  double quotient = std::numeric_limits<double>::infinity();
};

// The constrained problem on one fixed metric. Iterates are stored as one
// vector x = [u; v] of length 2N.
class Problem
{
public:
  Problem(const MetricField &g, const EigenParams &params)
    : fq_(g), params_(params), N_(g.grid().size()),
      alpha_((params.a + 1.0) / params.p), beta_((params.b + 1.0) / params.q)
  {
  }

  std::size_t nodes() const { return N_; }
  const FaceQuadrature &quadrature() const { return fq_; }

  std::span<const double> u(std::span<const double> x) const { return x.subspan(0, N_); }
  std::span<const double> v(std::span<const double> x) const { return x.subspan(N_, N_); }

  Evaluation evaluate(std::span<const double> x) const
  {
    Evaluation e;
    e.P = diffgeo::gradient_power_integral(fq_, u(x), params_.p);
    e.Q = diffgeo::gradient_power_integral(fq_, v(x), params_.q);
    const auto W = fq_.node_weight();
    const auto uu = u(x), vv = v(x);
    double B = 0.0;
    for (std::size_t k = 0; k < N_; ++k)
    {
      B += W[k] * abs_pow(uu[k], params_.a) * abs_pow(vv[k], params_.b) * uu[k] * vv[k];
    }
    e.B = B;
    if (B > 0.0 && std::isfinite(e.P) && std::isfinite(e.Q))
    {
      e.quotient = std::pow(e.P, alpha_) * std::pow(e.Q, beta_) / B;
    }
    return e;
  }

  // Shifts u and v by constants until C_u = C_v = 0 (Newton on the 2x2 system).
  // The shifts leave A unchanged.
  bool project(std::span<double> x) const
  {
    const auto W = fq_.node_weight();
    const double a = params_.a, b = params_.b;
    auto uu = x.subspan(0, N_), vv = x.subspan(N_, N_);
    for (int it = 0; it < 60; ++it)
    {
      double Cu = 0.0, Cv = 0.0, scale = 0.0;
      double J11 = 0.0, J12 = 0.0, J21 = 0.0, J22 = 0.0;
      for (std::size_t k = 0; k < N_; ++k)
      {
        const double pu = abs_pow(uu[k], a), pv = abs_pow(vv[k], b);
        const double w = W[k] * pu * pv;
        Cu += w * vv[k];
        Cv += w * uu[k];
        scale += w * (std::abs(uu[k]) + std::abs(vv[k]));
        J11 += W[k] * abs_pow_derivative(uu[k], a) * pv * vv[k];
        J22 += W[k] * abs_pow_derivative(vv[k], b) * pu * uu[k];
        J12 += (b + 1.0) * w;
        J21 += (a + 1.0) * w;
      }
      if (!std::isfinite(Cu) || !std::isfinite(Cv))
      {
        return false;
      }
      if (std::abs(Cu) <= 1e-15 * scale && std::abs(Cv) <= 1e-15 * scale)
      {
        return true;
      }
      const double det = J11 * J22 - J12 * J21;
      if (!(std::abs(det) > 0.0) || !std::isfinite(det))
      {
        return false;
      }
      const double cu = -(J22 * Cu - J12 * Cv) / det;
      const double cv = -(J11 * Cv - J21 * Cu) / det;
      for (std::size_t k = 0; k < N_; ++k)
      {
        uu[k] += cu;
        vv[k] += cv;
      }
      if (it > 2 && std::abs(cu) + std::abs(cv) <= 1e-15 * (1.0 + scale))
      {
        return true;
      }
    }
    return true;
  }

  // Rescales (u, v) -> (s u, t v) so that B = 1 and int|grad u|^p = int|grad v|^q.
  // Among all such rescalings this one minimizes A, and then A equals the
  // scale-invariant quotient P^{(a+1)/p} Q^{(b+1)/q} / B.
  bool normalize(std::span<double> x, Evaluation &e) const
  {
    e = evaluate(x);
    if (!(e.B > 0.0) || !(e.P > 0.0) || !(e.Q > 0.0) || !std::isfinite(e.quotient))
    {
      return false;
    }
    const double X = e.quotient;
    const double s = std::pow(X / e.P, 1.0 / params_.p);
    const double t = std::pow(X / e.Q, 1.0 / params_.q);
    for (std::size_t k = 0; k < N_; ++k)
    {
      x[k] *= s;
      x[N_ + k] *= t;
    }
    e = evaluate(x);
    return std::isfinite(e.quotient);
  }

  // Euclidean gradient of the quotient at a normalized point, and the KKT
  // residual norms (||r_u||, ||r_v||) in L^2(dmu).
  void gradient(std::span<const double> x, double lambda, std::span<double> grad,
                double &res_u, double &res_v, double &rhs_norm) const
  {
    const auto W = fq_.node_weight();
    const double a = params_.a, b = params_.b;
    auto gu = grad.subspan(0, N_), gv = grad.subspan(N_, N_);
    diffgeo::weak_p_laplacian(fq_, u(x), params_.p, params_.delta, gu);
    diffgeo::weak_p_laplacian(fq_, v(x), params_.q, params_.delta, gv);
    const auto uu = u(x), vv = v(x);
    double ru = 0.0, rv = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t k = 0; k < N_; ++k)
    {
      const double w = abs_pow(uu[k], a) * abs_pow(vv[k], b);
      const double wv = w * vv[k], wu = w * uu[k];
      // gu currently holds W (-Delta_p u); r_u = Delta_p u + lambda wv.
      const double r_u = -gu[k] / W[k] + lambda * wv;
      const double r_v = -gv[k] / W[k] + lambda * wu;
      ru += W[k] * r_u * r_u;
      rv += W[k] * r_v * r_v;
      nu += W[k] * wv * wv;
      nv += W[k] * wu * wu;
      gu[k] = -(a + 1.0) * W[k] * r_u;
      gv[k] = -(b + 1.0) * W[k] * r_v;
    }
    res_u = std::sqrt(ru);
    res_v = std::sqrt(rv);
    rhs_norm = std::max(std::sqrt(nu), std::sqrt(nv));
  }

private:
  FaceQuadrature fq_;
  const EigenParams &params_;
  std::size_t N_;
  double alpha_, beta_;
};

std::vector<double> initial_guess(const Grid &grid, InitMode mode, std::uint64_t seed)
{
  const std::size_t N = grid.size();
  std::vector<double> f(N, 0.0);
  const double kx = 2.0 * std::numbers::pi / grid.length(0);
  const double ky = 2.0 * std::numbers::pi / grid.length(1);
  switch (mode)
  {
    case InitMode::Sine:
      for (std::size_t k = 0; k < N; ++k)
      {
        f[k] = std::sin(kx * grid.x(k));
      }
      break;
    case InitMode::LowestModes:
      for (std::size_t k = 0; k < N; ++k)
      {
        f[k] = std::sin(kx * grid.x(k)) + std::cos(kx * grid.x(k));
        if (grid.dim() == 2)
        {
          f[k] += std::sin(ky * grid.y(k)) + std::cos(ky * grid.y(k));
        }
      }
      break;
    case InitMode::Random:
    {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      const int jmax = grid.dim() == 2 ? 3 : 0;
      for (int mi = 0; mi <= 3; ++mi)
      {
        for (int mj = -jmax; mj <= jmax; ++mj)
        {
          if (mi == 0 && mj <= 0)
          {
            continue;
          }
          const double c = coef(rng), s = coef(rng);
          for (std::size_t k = 0; k < N; ++k)
          {
            const double arg = mi * kx * grid.x(k) + mj * ky * grid.y(k);
            f[k] += c * std::cos(arg) + s * std::sin(arg);
          }
        }
      }
      break;
    }
  }
  return f;
}

// Limited-memory BFGS history with a spectral preconditioner as the initial
// inverse Hessian.
class DirectionBuilder
{
public:
  DirectionBuilder(std::size_t nodes, SpectralPreconditioner &precond)
    : N_(nodes), precond_(precond)
  {
  }

  void reset() { pairs_.clear(); }
  bool empty() const { return pairs_.empty(); }

  void push(std::vector<double> s, std::vector<double> y)
  {
    const double sy = dot(s, y);
    if (!(sy > 1e-300))
    {
      return;
    }
    std::vector<double> My(y.size());
    apply_precond(y, My);
    const double yMy = dot(y, My);
    if (yMy > 0.0)
    {
      gamma_ = sy / yMy;
    }
    pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
    if (pairs_.size() > kMemory)
    {
      pairs_.pop_front();
    }
  }

  // direction = -H grad
  void direction(std::span<const double> grad, std::span<double> dir)
  {
    std::vector<double> q(grad.begin(), grad.end());
    std::vector<double> alpha(pairs_.size());
    for (std::size_t i = pairs_.size(); i-- > 0;)
    {
      alpha[i] = pairs_[i].rho * dot(pairs_[i].s, q);
      for (std::size_t k = 0; k < q.size(); ++k)
      {
        q[k] -= alpha[i] * pairs_[i].y[k];
      }
    }
    std::vector<double> r(q.size());
    apply_precond(q, r);
    for (auto &val : r)
    {
      val *= gamma_;
    }
    for (std::size_t i = 0; i < pairs_.size(); ++i)
    {
      const double beta = pairs_[i].rho * dot(pairs_[i].y, r);
      for (std::size_t k = 0; k < r.size(); ++k)
      {
        r[k] += pairs_[i].s[k] * (alpha[i] - beta);
      }
    }
    for (std::size_t k = 0; k < r.size(); ++k)
    {
      dir[k] = -r[k];
    }
  }

private:
  struct Pair
  {
    std::vector<double> s, y;
    double rho;
  };
  static constexpr std::size_t kMemory = 10;

  void apply_precond(std::span<const double> in, std::span<double> out)
  {
    precond_.apply(in.subspan(0, N_), out.subspan(0, N_));
    precond_.apply(in.subspan(N_, N_), out.subspan(N_, N_));
  }

  std::size_t N_;
  SpectralPreconditioner &precond_;
  std::deque<Pair> pairs_;
  double gamma_ = 1.0;
};

void require_finite(std::span<const double> x)
{
  for (double v : x)
  {
    if (!std::isfinite(v))
    {
      throw SolverError("eigensolver produced a non-finite value");
    }
  }
}

}  // namespace

InitMode parse_init_mode(const std::string &name)
{
  if (name == "lowest_modes")
  {
    return InitMode::LowestModes;
  }
  if (name == "sine")
  {
    return InitMode::Sine;
  }
  if (name == "random")
  {
    return InitMode::Random;
  }
  throw ParameterError("unknown eigen initialization mode '" + name + "'");
}

std::string to_string(InitMode mode)
{
  switch (mode)
  {
    case InitMode::LowestModes:
      return "lowest_modes";
    case InitMode::Sine:
      return "sine";
    case InitMode::Random:
      return "random";
  }
  return "?";
}

EigenParams EigenParams::from_pqa(double p, double q, double a)
{
  EigenParams params;
  params.p = p;
  params.q = q;
  params.a = a;
  params.b = q * (1.0 - (a + 1.0) / p) - 1.0;
  // Snap round-off so that b = 0 and integer b are exact.
  const double rb = std::round(params.b);
  if (std::abs(params.b - rb) < 1e-13)
  {
    params.b = rb;
  }
  params.validate();
  return params;
}

void EigenParams::validate() const
{
  std::ostringstream msg;
  if (!(p > 1.0) || !(q > 1.0))
  {
    msg << "exponents must satisfy p > 1 and q > 1 (p = " << p << ", q = " << q << ")";
  }
  else if (!(a >= 0.0) || !(b >= 0.0))
  {
    msg << "weight exponents must be non-negative (a = " << a << ", b = " << b << ")";
  }
  else if (std::abs((a + 1.0) / p + (b + 1.0) / q - 1.0) > 1e-12)
  {
    msg << "exponents violate (a+1)/p + (b+1)/q = 1 (residual "
        << (a + 1.0) / p + (b + 1.0) / q - 1.0 << ")";
  }
  else if (!(delta >= 0.0))
  {
    msg << "regularizer delta must be non-negative";
  }
  else if (!(tol_kkt > 0.0) || max_iters < 1)
  {
    msg << "tolerance and iteration limit must be positive";
  }
  if (!msg.str().empty())
  {
    throw ParameterError(msg.str());
  }
}

double functional_A(const ScalarField &u, const ScalarField &v, const MetricField &g,
                    const EigenParams &params)
{
  require_same_grid(u.grid(), g.grid(), "functional_A");
  require_same_grid(v.grid(), g.grid(), "functional_A");
  const FaceQuadrature fq(g);
  return (params.a + 1.0) / params.p * diffgeo::gradient_power_integral(fq, u.values(), params.p) +
         (params.b + 1.0) / params.q * diffgeo::gradient_power_integral(fq, v.values(), params.q);
}

double functional_B(const ScalarField &u, const ScalarField &v, const MetricField &g,
                    const EigenParams &params)
{
  require_same_grid(u.grid(), g.grid(), "functional_B");
  require_same_grid(v.grid(), g.grid(), "functional_B");
  const double cell = g.grid().cell_volume();
  double B = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
  {
    B += g.sqrt_det(k) * cell * abs_pow(u[k], params.a) * abs_pow(v[k], params.b) * u[k] * v[k];
  }
  return B;
}

std::pair<double, double> zero_mean_constraints(const ScalarField &u, const ScalarField &v,
                                                const MetricField &g, const EigenParams &params)
{
  require_same_grid(u.grid(), g.grid(), "zero_mean_constraints");
  require_same_grid(v.grid(), g.grid(), "zero_mean_constraints");
  const double cell = g.grid().cell_volume();
  double Cu = 0.0, Cv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
  {
    const double w = g.sqrt_det(k) * cell * abs_pow(u[k], params.a) * abs_pow(v[k], params.b);
    Cu += w * v[k];
    Cv += w * u[k];
  }
  return {Cu, Cv};
}

double kkt_residual(double lambda, const ScalarField &u, const ScalarField &v,
                    const MetricField &g, const EigenParams &params)
{
  require_same_grid(u.grid(), g.grid(), "kkt_residual");
  require_same_grid(v.grid(), g.grid(), "kkt_residual");
  const auto lap_u = diffgeo::p_laplacian(u, g, params.p, params.delta);
  const auto lap_v = diffgeo::p_laplacian(v, g, params.q, params.delta);
  const double cell = g.grid().cell_volume();
  double ru = 0.0, rv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
  {
    const double w = abs_pow(u[k], params.a) * abs_pow(v[k], params.b);
    const double r_u = lap_u[k] + lambda * w * v[k];
    const double r_v = lap_v[k] + lambda * w * u[k];
    ru += g.sqrt_det(k) * cell * r_u * r_u;
    rv += g.sqrt_det(k) * cell * r_v * r_v;
  }
  return std::max(std::sqrt(ru), std::sqrt(rv));
}

EigenPair first_eigenpair(const MetricField &g, const EigenParams &params,
                          const std::optional<WarmStart> &warm)
{
  params.validate();
  const Grid &grid = g.grid();
  if (warm)
  {
    require_same_grid(warm->first.grid(), grid, "first_eigenpair warm start");
    require_same_grid(warm->second.grid(), grid, "first_eigenpair warm start");
  }

  const Problem problem(g, params);
  const std::size_t N = problem.nodes();
  const double Lmax = grid.dim() == 1 ? grid.length(0) : std::max(grid.length(0), grid.length(1));
  const double sigma = std::pow(2.0 * std::numbers::pi / Lmax, 2);
  SpectralPreconditioner precond(grid, sigma);

  // Starting point: warm start if usable, else the configured initialization,
  // then seeded random fields on restart.
  std::vector<double> x(2 * N);
  Evaluation e;
  int restarts = 0;
  bool ready = false;
  if (warm)
  {
    std::copy(warm->first.values().begin(), warm->first.values().end(), x.begin());
    std::copy(warm->second.values().begin(), warm->second.values().end(), x.begin() + N);
    ready = problem.project(x) && problem.normalize(x, e);
  }
  if (!ready)
  {
    const auto f = initial_guess(grid, params.init, params.seed);
    std::copy(f.begin(), f.end(), x.begin());
    std::copy(f.begin(), f.end(), x.begin() + N);
    ready = problem.project(x) && problem.normalize(x, e);
  }
  while (!ready)
  {
    if (restarts == 3)
    {
      throw SolverError("eigensolver could not reach B > 0 after 3 restarts");
    }
    ++restarts;
    const auto f = initial_guess(grid, InitMode::Random, params.seed + restarts);
    std::copy(f.begin(), f.end(), x.begin());
    std::copy(f.begin(), f.end(), x.begin() + N);
    ready = problem.project(x) && problem.normalize(x, e);
  }
  require_finite(x);

  DirectionBuilder builder(N, precond);
  std::vector<double> grad(2 * N), grad_new(2 * N), dir(2 * N), trial(2 * N);
  double res_u = 0.0, res_v = 0.0, rhs = 0.0;
  problem.gradient(x, e.quotient, grad, res_u, res_v, rhs);
  const auto converged_now = [&]
  { return std::max(res_u, res_v) <= params.tol_kkt * e.quotient * rhs; };

  int it = 0;
  bool converged = converged_now();
  while (!converged && it < params.max_iters)
  {
    ++it;
    builder.direction(grad, dir);
    double slope = dot(grad, dir);
    if (!(slope < 0.0))
    {
      builder.reset();
      builder.direction(grad, dir);
      slope = dot(grad, dir);
    }

    bool accepted = false;
    Evaluation e_trial;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
    {
      double tau = 1.0;
      for (int halving = 0; halving < 40; ++halving, tau *= 0.5)
      {
        for (std::size_t k = 0; k < trial.size(); ++k)
        {
          trial[k] = x[k] + tau * dir[k];
        }
        if (problem.project(trial) && problem.normalize(trial, e_trial) &&
            e_trial.quotient <= e.quotient + 1e-4 * tau * slope)
        {
          accepted = true;
          break;
        }
      }
      if (!accepted)
      {
        if (builder.empty())
        {
          break;
        }
        builder.reset();
        builder.direction(grad, dir);
        slope = dot(grad, dir);
      }
    }
    if (!accepted)
    {
      // No further decrease is representable; accept the current point.
      break;
    }
    require_finite(trial);

    problem.gradient(trial, e_trial.quotient, grad_new, res_u, res_v, rhs);
    std::vector<double> s(2 * N), y(2 * N);
    for (std::size_t k = 0; k < s.size(); ++k)
    {
      s[k] = trial[k] - x[k];
      y[k] = grad_new[k] - grad[k];
    }
    builder.push(std::move(s), std::move(y));
    x.swap(trial);
    grad.swap(grad_new);
    e = e_trial;
    converged = converged_now();
  }

  ScalarField u(grid, std::vector<double>(x.begin(), x.begin() + N));
  ScalarField v(grid, std::vector<double>(x.begin() + N, x.end()));
  const double lambda = functional_A(u, v, g, params);
  const auto [Cu, Cv] = zero_mean_constraints(u, v, g, params);
  ConstraintResiduals cr{std::abs(functional_B(u, v, g, params) - 1.0), std::abs(Cu),
                         std::abs(Cv)};
  EigenPair pair{lambda, std::move(u), std::move(v), std::max(res_u, res_v), cr, it, restarts,
                 converged};
  return pair;
}

double lambda_of_t(const CoupledState &state, const EigenParams &params,
                   std::optional<WarmStart> *warm)
{
  auto pair = first_eigenpair(state.g, params, warm ? *warm : std::nullopt);
  if (!pair.converged)
  {
    std::ostringstream msg;
    msg << "eigensolve at t = " << state.t << " did not converge (residual " << pair.kkt_residual
        << " after " << pair.iterations << " iterations)";
    throw SolverError(msg.str());
  }
  if (warm)
  {
    *warm = WarmStart{pair.u, pair.v};
  }
  return pair.lambda;
}

}  // namespace pqflow::pqeigen
