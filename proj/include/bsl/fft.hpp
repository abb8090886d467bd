#pragma once

#include <Eigen/Core>

#include "bsl/grid.hpp"

namespace bsl {

// Unitary n-dimensional DFT: fhat_j = N^{-n/2} sum_i exp(-2 pi i j.i / N) f_i.
ScalarField fft_forward(const ScalarField& field);
ScalarField fft_inverse(const ScalarField& field);

// In-place variants on raw row-major storage of a grid-shaped array.
void fft_forward_inplace(Eigen::ArrayXcd& data, const GridSpec& grid);
void fft_inverse_inplace(Eigen::ArrayXcd& data, const GridSpec& grid);

// Continuous transform (2 pi)^{-n/2} int exp(-i xi.x) f dx sampled on the
// frequency lattice. Because the box starts at -R_box the lattice value is
//   h^n N^{n/2} (2 pi)^{-n/2} (-1)^{j_1+...+j_n} fhat_j.
ScalarField continuous_fourier_transform(const ScalarField& field);
// (2 pi)^{-n/2} int exp(i xi.x) g dxi by the same lattice rule (inverse of the above).
ScalarField inverse_continuous_fourier_transform(const ScalarField& spectrum);

// (-1)^{j_1+...+j_n} over the spectral lattice.
Eigen::ArrayXd lattice_sign(const GridSpec& grid);
// |xi_j|^2 over the spectral lattice.
Eigen::ArrayXd frequency_norm2(const GridSpec& grid);

}  // namespace bsl
