#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pqflow
{

// Uniform periodic grid on the m-torus, m in {1, 2}. Node (i, j) sits at
// (i h_1, j h_2); flat index is i + n j.
class Grid
{
public:
  Grid(int dim, int n, double L1, double L2 = 1.0);

  static Grid circle(int n, double L) { return Grid(1, n, L); }
  static Grid torus(int n, double L1, double L2) { return Grid(2, n, L1, L2); }

  int dim() const { return dim_; }
  int n() const { return n_; }
  double length(int axis) const { return length_[axis]; }
  double spacing(int axis) const { return length_[axis] / n_; }
  // Product of the spacings: the coordinate volume of one cell.
  double cell_volume() const;
  std::size_t size() const { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }

  int wrap(int i) const { return ((i % n_) + n_) % n_; }
  std::size_t index(int i, int j = 0) const
  {
    return dim_ == 1 ? std::size_t(wrap(i)) : std::size_t(wrap(i)) + std::size_t(n_) * wrap(j);
  }
  int i_of(std::size_t k) const { return int(k % n_); }
  int j_of(std::size_t k) const { return dim_ == 1 ? 0 : int(k / n_); }
  double x(std::size_t k) const { return i_of(k) * spacing(0); }
  double y(std::size_t k) const { return dim_ == 1 ? 0.0 : j_of(k) * spacing(1); }

  bool operator==(const Grid &) const = default;

private:
  int dim_;
  int n_;
  std::array<double, 2> length_;
};

void require_same_grid(const Grid &a, const Grid &b, const char *what);

// Independent components of a symmetric tensor at one node. For m = 1 only xx
// is meaningful; xy and yy stay zero.
struct SymMat
{
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  SymMat operator+(const SymMat &o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  SymMat operator-(const SymMat &o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  SymMat operator*(double s) const { return {s * xx, s * xy, s * yy}; }
  bool operator==(const SymMat &) const = default;
};

class ScalarField
{
public:
  ScalarField(const Grid &grid, std::vector<double> values);
  static ScalarField constant(const Grid &grid, double value);
  static ScalarField from_function(const Grid &grid,
                                   const std::function<double(double, double)> &f);

  const Grid &grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }

  double max_abs() const;
  double min() const;
  double max() const;
  // Cyclic shift by (di, dj) grid cells: result(i, j) = this(i - di, j - dj).
  ScalarField shifted(int di, int dj) const;

private:
  Grid grid_;
  std::vector<double> values_;
};

// Contravariant vector field: one component array per axis.
class VectorField
{
public:
  VectorField(const Grid &grid, std::array<std::vector<double>, 2> components);

  const Grid &grid() const { return grid_; }
  std::span<const double> component(int axis) const { return components_[axis]; }
  double operator()(int axis, std::size_t k) const { return components_[axis][k]; }

private:
  Grid grid_;
  std::array<std::vector<double>, 2> components_;
};

class SymTensorField
{
public:
  SymTensorField(const Grid &grid, std::vector<SymMat> values);

  const Grid &grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const SymMat &operator[](std::size_t k) const { return values_[k]; }
  std::span<const SymMat> values() const { return values_; }
  SymTensorField shifted(int di, int dj) const;

private:
  Grid grid_;
  std::vector<SymMat> values_;
};

}  // namespace pqflow
