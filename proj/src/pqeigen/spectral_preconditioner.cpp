#include "spectral_preconditioner.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

namespace pqflow::pqeigen
{

namespace
{

// FFTW planning is not thread-safe; execution is.
std::mutex &planner_mutex()
{
  static std::mutex m;
  return m;
}

}  // namespace

SpectralPreconditioner::SpectralPreconditioner(const Grid &grid, double sigma) : grid_(grid)
{
  const int n = grid.n();
  const std::size_t N = grid.size();
  inverse_symbol_.resize(N);
  const double cell = grid.cell_volume();
  for (std::size_t k = 0; k < N; ++k)
  {
    double symbol = sigma;
    for (int axis = 0; axis < grid.dim(); ++axis)
    {
      const int mode = axis == 0 ? grid.i_of(k) : grid.j_of(k);
      const double h = grid.spacing(axis);
      const double s = std::sin(std::numbers::pi * mode / n);
      symbol += 4.0 * s * s / (h * h);
    }
    inverse_symbol_[k] = 1.0 / (cell * symbol * double(N));
  }

  std::lock_guard lock(planner_mutex());
  buffer_ = fftw_alloc_complex(N);
  if (grid.dim() == 1)
  {
    forward_ = fftw_plan_dft_1d(n, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  else
  {
    // Row-major with the first index slowest: our flat index i + n j puts j first.
    forward_ = fftw_plan_dft_2d(n, n, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n, n, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
}

SpectralPreconditioner::~SpectralPreconditioner()
{
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(backward_);
  fftw_free(buffer_);
}

void SpectralPreconditioner::apply(std::span<const double> in, std::span<double> out)
{
  const std::size_t N = inverse_symbol_.size();
  for (std::size_t k = 0; k < N; ++k)
  {
    buffer_[k][0] = in[k];
    buffer_[k][1] = 0.0;
  }
  fftw_execute(forward_);
  for (std::size_t k = 0; k < N; ++k)
  {
    buffer_[k][0] *= inverse_symbol_[k];
    buffer_[k][1] *= inverse_symbol_[k];
  }
  fftw_execute(backward_);
  for (std::size_t k = 0; k < N; ++k)
  {
    out[k] = buffer_[k][0];
  }
}

}  // namespace pqflow::pqeigen
