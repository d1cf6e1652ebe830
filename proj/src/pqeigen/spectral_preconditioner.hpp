#pragma once

#include <complex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "pqflow/grid.hpp"

namespace pqflow::pqeigen
{

// Applies (cell * (sigma - Delta_flat))^{-1} on the periodic grid by FFT,
// where Delta_flat is the compact flat-metric Laplacian. Used to precondition
// gradients that carry node quadrature weights.
class SpectralPreconditioner
{
public:
  SpectralPreconditioner(const Grid &grid, double sigma);
  ~SpectralPreconditioner();
  SpectralPreconditioner(const SpectralPreconditioner &) = delete;
  SpectralPreconditioner &operator=(const SpectralPreconditioner &) = delete;

  void apply(std::span<const double> in, std::span<double> out);

private:
  Grid grid_;
  std::vector<double> inverse_symbol_;
  fftw_complex *buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace pqflow::pqeigen
