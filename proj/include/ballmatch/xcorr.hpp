#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "ballmatch/basis.hpp"
#include "ballmatch/rotation.hpp"
#include "ballmatch/volume.hpp"

namespace ballmatch {

// Euler-angle derivatives degenerate near beta in {0, pi}; callers must
// reparameterize (see optimize) instead of differentiating there.
struct gimbal_lock_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Rotation-independent kernel of the band-truncated cross-correlation for
// one fixed shift: xi^s_l[m,m'] = sum_k conj(t_hat[k,l,m]) fs_hat[k,l,m'].
class XiBlocks {
public:
    XiBlocks() = default;
    XiBlocks(int l_max, std::array<int, 3> shift);

    int l_max() const { return m_l_max; }
    const std::array<int, 3>& shift() const { return m_shift; }

    Eigen::MatrixXcd& block(int l) { return m_blocks[l]; }
    const Eigen::MatrixXcd& block(int l) const { return m_blocks[l]; }

    double total_energy() const;   // sum over all blocks of |xi|^2
    double band_energy(int l) const;

private:
    int m_l_max = -1;
    std::array<int, 3> m_shift{0, 0, 0};
    std::vector<Eigen::MatrixXcd> m_blocks;
};

XiBlocks xi_coefficients(const BallExpansion& t, const BallExpansion& f_s,
                         std::array<int, 3> shift = {0, 0, 0});

// C(g) = Re sum_{l<=l_cut} sum_{m,m'} xi_l[m,m'] D^l_{m,m'}(g).
double evaluate(const XiBlocks& xi, const Rotation& g, int l_cut);

// Full complex value; the imaginary part is a numerical diagnostic and
// stays below ~1e-8 relative for real-volume inputs.
cdouble evaluate_complex(const XiBlocks& xi, const Rotation& g, int l_cut);

// (dC/dalpha, dC/dbeta, dC/dgamma); throws gimbal_lock_error when beta is
// within 1e-3 of {0, pi}.
Eigen::Vector3d gradient(const XiBlocks& xi, const Rotation& g, int l_cut);

// Symmetric 3x3 second-derivative matrix in (alpha, beta, gamma).
Eigen::Matrix3d hessian(const XiBlocks& xi, const Rotation& g, int l_cut);

// Value, gradient and Hessian in one pass (order = 0, 1 or 2).
struct CorrelationDerivatives {
    double value = 0.0;
    double imag = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};
CorrelationDerivatives correlation_derivatives(const XiBlocks& xi, const EulerZyz& angles,
                                               int l_cut, int order);

// Fraction of xi energy above degree l_cut, in [0, 1].
double energy_ratio(const XiBlocks& xi, int l_cut);

// Term-count model of evaluation effort relative to the full band limit.
double eval_cost_fraction(int l_cut, int l_max);

// Conjugate the kernel by a fixed rotation: returns xi~ with
// C~(g) = C(g * a); used by the optimizer to step away from gimbal lock.
// Blocks above l_limit are left zero when a limit is given.
XiBlocks xi_compose_right(const XiBlocks& xi, const Rotation& a, int l_limit = -1);

// Binary missing-wedge support in Fourier space for a single-axis tilt
// (beam along z). A frequency is kept iff |nu_z| <= tan(theta_max)*|nu_u|
// with nu_u the in-plane component perpendicular to the tilt axis.
class WedgeMask {
public:
    WedgeMask() = default;
    WedgeMask(int n, double theta_max_deg, const Eigen::Vector3d& tilt_axis);

    int n() const { return m_n; }
    double theta_max_deg() const { return m_theta_max_deg; }
    const Eigen::Vector3d& tilt_axis() const { return m_tilt_axis; }

    // Integer frequencies in [-n/2, n/2); DC is always kept.
    bool keeps(int fx, int fy, int fz) const;
    bool keeps_direction(const Eigen::Vector3d& nu) const;
    double kept_fraction() const;

private:
    int m_n = 0;
    double m_theta_max_deg = 90.0;
    double m_tan_theta = 0.0;
    bool m_all_pass = true;
    Eigen::Vector3d m_tilt_axis{0, 1, 0};
    Eigen::Vector3d m_perp{1, 0, 0};  // in-plane direction normal to tilt axis
};

WedgeMask build_wedge_mask(int n, double theta_max_deg,
                           const Eigen::Vector3d& tilt_axis = Eigen::Vector3d(0, 1, 0));

// Orthogonal projection onto the measured region: FFT, zero the wedge,
// inverse FFT. Linear, idempotent, self-adjoint.
Volume apply_wedge(const Volume& v, const WedgeMask& mask);

// Default angular roll-off of the tapered wedge filter, degrees.
inline constexpr double kWedgeTaperDeg = 6.0;

// Smooth keep profile: 1 well inside the measured region, rolling off to 0
// at the sharp wedge boundary over `taper_deg`. With taper 0 this is the
// binary mask.
double wedge_keep_profile(const WedgeMask& mask, const Eigen::Vector3d& nu, double taper_deg);

// Wedge filter with the tapered profile; band-limited in angle, which keeps
// the companion power kernel below free of Gibbs ringing.
Volume apply_wedge_taper(const Volume& v, const WedgeMask& mask,
                         double taper_deg = kWedgeTaperDeg);

// Kernel for the rotation-dependent masked template power: for this kernel,
// evaluate(k, g, l) approximates the fraction rho(g) of the template's
// spectral energy removed by the (tapered) wedge after rotating the template
// by g, so ||S R_g t||^2 = ||t||^2 (1 - rho(g)). Used to normalize the
// constrained correlation under a missing wedge.
XiBlocks wedge_power_kernel(const Volume& tmpl, const WedgeMask& mask, int l_max,
                            double taper_deg = kWedgeTaperDeg);

}  // namespace ballmatch
