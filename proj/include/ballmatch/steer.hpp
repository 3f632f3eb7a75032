#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ballmatch/basis.hpp"
#include "ballmatch/rotation.hpp"

namespace ballmatch {

// D^l(g) for all degrees l <= l_max. Block l is (2l+1)x(2l+1), rows indexed
// by m and columns by m', both running -l..l. Convention:
//   D^l_{m,m'}(alpha,beta,gamma) = exp(-i m alpha) d^l_{m,m'}(beta) exp(-i m' gamma)
// with active ZYZ angles, so that rotated coefficients are f' = D^l f per
// degree block and synthesize(rotate_expansion(e,g)) equals the volume
// rotated by g.
struct WignerStack {
    int l_max = -1;
    std::vector<Eigen::MatrixXcd> blocks;

    const Eigen::MatrixXcd& operator[](int l) const { return blocks[l]; }
};

// Real little-d matrix d^l(beta), computed by a three-term recursion over
// degree at fixed beta; orthogonal.
Eigen::MatrixXd wigner_d_small(int l, double beta);

WignerStack wigner_D(int l_max, const Rotation& g);

struct WignerGradient {
    WignerStack d_alpha, d_beta, d_gamma;
};

// Closed-form partial derivatives of D with respect to the ZYZ angles.
WignerGradient wigner_D_grad(int l_max, const Rotation& g);

// Exact rotation in coefficient space: per (k,l), the order vector is
// multiplied by D^l(g). Spec and reality flag are preserved.
BallExpansion rotate_expansion(const BallExpansion& e, const Rotation& g);

namespace detail {

// d^l(beta) together with its first `order` beta-derivatives, for all
// l <= l_max. Layout: tables[order][l] is a dense (2l+1)^2 row-major matrix.
struct LittleDStack {
    int l_max = -1;
    int order = 0;
    std::vector<std::vector<double>> value, d1, d2;

    const double* block(int deriv, int l) const {
        const auto& t = deriv == 0 ? value : (deriv == 1 ? d1 : d2);
        return t[l].data();
    }
};

LittleDStack little_d_stack(int l_max, double beta, int order);

}  // namespace detail

}  // namespace ballmatch
