#pragma once

#include <vector>

namespace ballmatch::detail {

// Spherical Bessel function of the first kind, j_l(x).
double sph_jl(int l, double x);

// All of j_0(x) .. j_{l_max}(x) in one pass.
void sph_jl_array(int l_max, double x, double* out);

// d/dx j_l(x).
double sph_jl_prime(int l, double x);

// k-th positive root of j_l (k >= 1), |j_l(root)| < 1e-13.
double bessel_root(int l, int k);

// Rows 0..l_max of roots <= lambda_cut, built incrementally via the
// interlacing brackets root(l-1,k) < root(l,k) < root(l-1,k+1).
std::vector<std::vector<double>> bessel_root_table(int l_max, double lambda_cut);

}  // namespace ballmatch::detail
