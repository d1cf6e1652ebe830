#include "pqflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pqflow/errors.hpp"

namespace pqflow
{

Grid::Grid(int dim, int n, double L1, double L2) : dim_(dim), n_(n), length_{L1, dim == 1 ? 1.0 : L2}
{
  if (dim != 1 && dim != 2)
  {
    throw ParameterError("grid dimension must be 1 or 2, got " + std::to_string(dim));
  }
  if (n < 8)
  {
    throw ParameterError("grid needs at least 8 points per axis, got " + std::to_string(n));
  }
  if (!(L1 > 0.0) || (dim == 2 && !(L2 > 0.0)))
  {
    throw ParameterError("grid axis lengths must be positive");
  }
}

double Grid::cell_volume() const
{
  return dim_ == 1 ? spacing(0) : spacing(0) * spacing(1);
}

void require_same_grid(const Grid &a, const Grid &b, const char *what)
{
  if (!(a == b))
  {
    throw StructuralError(std::string("grid mismatch in ") + what);
  }
}

namespace
{

template <typename T>
std::vector<T> shift_values(const Grid &grid, std::span<const T> values, int di, int dj)
{
  std::vector<T> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
  {
    const int i = grid.i_of(k), j = grid.j_of(k);
    out[k] = values[grid.index(i - di, j - dj)];
  }
  return out;
}

}  // namespace

ScalarField::ScalarField(const Grid &grid, std::vector<double> values)
  : grid_(grid), values_(std::move(values))
{
  if (values_.size() != grid_.size())
  {
    throw StructuralError("scalar field size does not match its grid");
  }
  for (double v : values_)
  {
    if (!std::isfinite(v))
    {
      throw StateError("scalar field contains a non-finite value");
    }
  }
}

ScalarField ScalarField::constant(const Grid &grid, double value)
{
  return ScalarField(grid, std::vector<double>(grid.size(), value));
}

ScalarField ScalarField::from_function(const Grid &grid,
                                       const std::function<double(double, double)> &f)
{
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < v.size(); ++k)
  {
    v[k] = f(grid.x(k), grid.y(k));
  }
  return ScalarField(grid, std::move(v));
}

double ScalarField::max_abs() const
{
  double m = 0.0;
  for (double v : values_)
  {
    m = std::max(m, std::abs(v));
  }
  return m;
}

double ScalarField::min() const
{
  return *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const
{
  return *std::max_element(values_.begin(), values_.end());
}

ScalarField ScalarField::shifted(int di, int dj) const
{
  return ScalarField(grid_, shift_values<double>(grid_, values_, di, dj));
}

VectorField::VectorField(const Grid &grid, std::array<std::vector<double>, 2> components)
  : grid_(grid), components_(std::move(components))
{
  if (components_[0].size() != grid_.size())
  {
    throw StructuralError("vector field size does not match its grid");
  }
  if (grid_.dim() == 1)
  {
    components_[1].assign(grid_.size(), 0.0);
  }
  else if (components_[1].size() != grid_.size())
  {
    throw StructuralError("vector field size does not match its grid");
  }
}

SymTensorField::SymTensorField(const Grid &grid, std::vector<SymMat> values)
  : grid_(grid), values_(std::move(values))
{
  if (values_.size() != grid_.size())
  {
    throw StructuralError("tensor field size does not match its grid");
  }
  for (auto &v : values_)
  {
    if (!std::isfinite(v.xx) || !std::isfinite(v.xy) || !std::isfinite(v.yy))
    {
      throw StateError("tensor field contains a non-finite value");
    }
    if (grid_.dim() == 1)
    {
      v.xy = 0.0;
      v.yy = 0.0;
    }
  }
}

SymTensorField SymTensorField::shifted(int di, int dj) const
{
  return SymTensorField(grid_, shift_values<SymMat>(grid_, values_, di, dj));
}

}  // namespace pqflow
