#pragma once

#include <complex>

namespace ballmatch::detail {

// Batched 1D real-to-complex DFT along the fastest axis: `count` rows of
// length n, output rows of length n/2+1. Plans are cached behind a global
// planner lock; execution is concurrency-safe.
void dft_r2c_rows(int n, int count, const double* in, std::complex<double>* out);

// In-place-style 3D transforms for the wedge filter (cube of side n,
// x fastest). Output of r2c has x-extent n/2+1.
void dft_r2c_3d(int n, const double* in, std::complex<double>* out);
void dft_c2r_3d(int n, const std::complex<double>* in, double* out);

}  // namespace ballmatch::detail
