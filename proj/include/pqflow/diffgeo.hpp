#pragma once

#include <array>
#include <span>
#include <vector>

#include "pqflow/grid.hpp"
#include "pqflow/metric.hpp"

namespace pqflow::diffgeo
{

// Face-centred quadrature for divergence-form operators.
//
// Face (axis, k) joins node k with node k + e_axis. Its metric is the
// arithmetic mean of the two nodal metrics, and its gradient uses the compact
// difference along the axis plus the mean of the two nodal centred differences
// across it. The discrete energy
//
//   E_p(f) = sum over faces of w_f (g_f^{ij} G_i G_j)^{p/2},
//   w_f = sqrt(det g_f) * cell_volume / m,
//
// approximates the integral of |grad f|^p, and every divergence-form operator
// in this module is the exact (negative) gradient of such an energy. Sums of
// those operators against the node weights therefore telescope to zero, and
// testing with f itself returns E_p(f).
class FaceQuadrature
{
public:
  explicit FaceQuadrature(const MetricField &g);

  const Grid &grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  std::size_t size() const { return grid_.size(); }

  const SymMat &metric(int axis, std::size_t k) const { return metric_[axis][k]; }
  const SymMat &inverse(int axis, std::size_t k) const { return inverse_[axis][k]; }
  double weight(int axis, std::size_t k) const { return weight_[axis][k]; }
  std::size_t neighbor(int axis, std::size_t k) const { return axis == 0 ? east_[k] : north_[k]; }
  // sqrt(det g) * cell_volume at each node: the node quadrature weight.
  std::span<const double> node_weight() const { return node_weight_; }

  // Covariant gradient (d_1 f, d_2 f) on face (axis, k).
  void face_gradient(std::span<const double> f, int axis, std::size_t k, double G[2]) const;
  // out += (d G / d f)^T F for face (axis, k).
  void scatter(int axis, std::size_t k, const double F[2], std::span<double> out) const;

private:
  Grid grid_;
  std::array<std::vector<SymMat>, 2> metric_;
  std::array<std::vector<SymMat>, 2> inverse_;
  std::array<std::vector<double>, 2> weight_;
  std::vector<double> node_weight_;
  std::vector<std::size_t> east_, west_, north_, south_, ne_, nw_, se_;
};

// s^{p/2} with exact shortcuts for p = 2 and p = 4.
double pow_half(double s, double p);

// E_p(f): the face-quadrature value of the integral of |grad f|_g^p.
double gradient_power_integral(const FaceQuadrature &fq, std::span<const double> f, double p);

// out_k = W_k * (-Delta_p f)_k where W_k is the node weight and Delta_p uses
// the regularized flux (|grad f|^2 + delta^2)^{(p-2)/2} grad f. Overwrites out.
void weak_p_laplacian(const FaceQuadrature &fq, std::span<const double> f, double p, double delta,
                      std::span<double> out);

// Centred partial derivatives d_i f at the nodes.
std::array<std::vector<double>, 2> partials(const ScalarField &f);

// (grad f)^i = g^{ij} d_j f with centred differences.
VectorField gradient(const ScalarField &f, const MetricField &g);
// |grad f|_g^2 = g^{ij} d_i f d_j f at the nodes.
ScalarField gradient_norm_sq(const ScalarField &f, const MetricField &g);

ScalarField laplace_beltrami(const ScalarField &f, const MetricField &g);
ScalarField p_laplacian(const ScalarField &f, const MetricField &g, double p, double delta);

struct Curvature
{
  SymTensorField ricci;
  ScalarField scalar;
};

// Ricci tensor and scalar curvature. In 2D the Gaussian curvature comes from
// the Brioschi formula with centred differences, R = 2K and Ric = (R/2) g;
// in 1D both vanish.
Curvature ricci_and_scalar(const MetricField &g);

// Scalar curvature of e^{2 u0} times the flat metric: R = -2 e^{-2 u0} Delta u0
// with the compact five-point flat Laplacian. Zero in 1D.
ScalarField conformal_scalar_curvature(const ScalarField &u0);

struct CouplingTensors
{
  SymTensorField coupled;  // Ric - kappa d(phi) (x) d(phi)
  ScalarField trace;       // R - kappa |grad phi|^2
};

CouplingTensors coupling_tensors(const CoupledState &state, double kappa);

double integrate(const ScalarField &f, const MetricField &g);
double volume(const MetricField &g);

ScalarField tension_field(const CoupledState &state);

// Smallest mu with det(T - mu g) = 0 at one node.
double min_generalized_eigenvalue(const SymMat &T, const SymMat &g, int dim);
// Both roots, ascending (second equals first in 1D).
std::array<double, 2> generalized_eigenvalues(const SymMat &T, const SymMat &g, int dim);

}  // namespace pqflow::diffgeo
