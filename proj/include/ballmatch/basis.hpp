#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "ballmatch/volume.hpp"

namespace ballmatch {

using cdouble = std::complex<double>;

struct BasisIndex {
    int k = 1;  // radial index, >= 1
    int l = 0;  // degree, >= 0
    int m = 0;  // order, -l..l
};

// k-th positive root of the spherical Bessel function j_l, |j_l(root)| < 1e-12.
double bessel_zero(int l, int k);

// Normalization c_{l,k} with integral of (c j_l(root r))^2 r^2 over [0,1] = 1.
double radial_norm(int l, int k);

// Orthonormal complex spherical harmonic, Condon-Shortley phase.
cdouble spherical_harmonic(int l, int m, double theta, double phi);

// Retained basis indices: all (l,k) with l <= l_max and root(l,k) <= lambda_cut,
// each carrying the 2l+1 orders m. Immutable and cheap to copy (shared payload).
class BasisSpec {
public:
    BasisSpec() = default;

    int l_max() const;
    double lambda_cut() const;

    int radial_count(int l) const;            // number of retained k for degree l
    double root(int l, int k) const;          // lambda_{l,k}, k >= 1
    double norm(int l, int k) const;          // c_{l,k}
    std::size_t coeff_count() const;          // total retained (k,l,m)
    std::size_t pair_count() const;           // total retained (l,k)

    // Coefficient layout: degree blocks in order of l; inside a block,
    // radial index k is the row and order m (= -l..l) the column.
    std::size_t block_offset(int l) const;
    std::size_t index_of(const BasisIndex& idx) const;

    bool compatible(const BasisSpec& other) const;
    bool valid() const { return m_impl != nullptr; }

    struct Impl;
    const Impl& impl() const { return *m_impl; }

private:
    friend BasisSpec build_spec(int, double);
    std::shared_ptr<const Impl> m_impl;
};

BasisSpec build_spec(int l_max, double lambda_cut);

// Default eigen-frequency cutoff for an n^3 grid: the voxel Nyquist
// pi*n/2 on the unit ball, lowered if needed so coeff_count <= n^3/4.
double default_lambda_cut(int n, int l_max);

// Complex coefficients over the retained index set.
class BallExpansion {
public:
    BallExpansion() = default;
    BallExpansion(BasisSpec spec, bool real_volume = false);

    const BasisSpec& spec() const { return m_spec; }
    bool real_volume() const { return m_real; }
    void set_real_volume(bool r) { m_real = r; }

    cdouble operator[](const BasisIndex& idx) const { return m_coeffs[m_spec.index_of(idx)]; }
    cdouble& operator[](const BasisIndex& idx) { return m_coeffs[m_spec.index_of(idx)]; }

    const std::vector<cdouble>& coeffs() const { return m_coeffs; }
    std::vector<cdouble>& coeffs() { return m_coeffs; }
    const cdouble* block(int l) const { return m_coeffs.data() + m_spec.block_offset(l); }
    cdouble* block(int l) { return m_coeffs.data() + m_spec.block_offset(l); }

    double norm() const;     // sqrt(sum |coeff|^2) = L2 norm by Parseval
    double energy() const;   // sum |coeff|^2

private:
    BasisSpec m_spec;
    std::vector<cdouble> m_coeffs;
    bool m_real = false;
};

// Project a volume onto the retained basis by spherical product quadrature.
// Voxels outside the unit ball do not contribute.
BallExpansion expand(const Volume& v, const BasisSpec& spec);

// Pointwise evaluation of the truncated series on an n^3 grid; exactly zero
// outside the unit ball.
Volume synthesize(const BallExpansion& e, int n, double voxel_size = 1.0);

// Zero all coefficients with l > l_cut.
BallExpansion lowpass(const BallExpansion& e, int l_cut);

}  // namespace ballmatch
