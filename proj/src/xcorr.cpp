#include "ballmatch/xcorr.hpp"

#include <cmath>
#include <numbers>

#include "ballmatch/steer.hpp"
#include "detail/fftw_util.hpp"
#include "detail/quadrature.hpp"

namespace ballmatch {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kGimbalMargin = 1e-3;

bool near_pole(double beta) {
    return beta < kGimbalMargin || beta > kPi - kGimbalMargin;
}
}  // namespace

XiBlocks::XiBlocks(int l_max, std::array<int, 3> shift) : m_l_max(l_max), m_shift(shift) {
    m_blocks.resize(l_max + 1);
    for (int l = 0; l <= l_max; ++l) m_blocks[l] = Eigen::MatrixXcd::Zero(2 * l + 1, 2 * l + 1);
}

double XiBlocks::total_energy() const {
    double e = 0.0;
    for (const auto& b : m_blocks) e += b.squaredNorm();
    return e;
}

double XiBlocks::band_energy(int l) const { return m_blocks[l].squaredNorm(); }

XiBlocks xi_coefficients(const BallExpansion& t, const BallExpansion& f_s,
                         std::array<int, 3> shift) {
    if (!t.spec().compatible(f_s.spec()))
        throw std::invalid_argument("xi_coefficients: template and subtomogram specs differ");
    const BasisSpec& spec = t.spec();
    XiBlocks xi(spec.l_max(), shift);
    for (int l = 0; l <= spec.l_max(); ++l) {
        const int n_k = spec.radial_count(l);
        if (n_k == 0) continue;
        const int w = 2 * l + 1;
        using RowMat = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> tm(t.block(l), n_k, w);
        Eigen::Map<const RowMat> fm(f_s.block(l), n_k, w);
        xi.block(l) = tm.adjoint() * fm;
    }
    return xi;
}

CorrelationDerivatives correlation_derivatives(const XiBlocks& xi, const EulerZyz& ang,
                                               int l_cut, int order) {
    if (l_cut > xi.l_max()) throw std::invalid_argument("correlation: l_cut exceeds kernel band");
    const auto st = detail::little_d_stack(l_cut, ang.beta, order);

    std::vector<cdouble> ua(2 * l_cut + 1), ug(2 * l_cut + 1);
    for (int m = -l_cut; m <= l_cut; ++m) {
        ua[m + l_cut] = std::polar(1.0, -m * ang.alpha);
        ug[m + l_cut] = std::polar(1.0, -m * ang.gamma);
    }

    cdouble val{}, ga{}, gb{}, gg{}, haa{}, hab{}, hag{}, hbb{}, hbg{}, hgg{};
    for (int l = 0; l <= l_cut; ++l) {
        const auto& blk = xi.block(l);
        const int w = 2 * l + 1;
        const double* dv = st.value[l].data();
        const double* d1 = order >= 1 ? st.d1[l].data() : nullptr;
        const double* d2 = order >= 2 ? st.d2[l].data() : nullptr;
        for (int m = -l; m <= l; ++m) {
            const cdouble pa = ua[m + l_cut];
            for (int mp = -l; mp <= l; ++mp) {
                const cdouble z = blk(m + l, mp + l) * pa * ug[mp + l_cut];
                const std::size_t at = static_cast<std::size_t>(m + l) * w + (mp + l);
                const cdouble t = z * dv[at];
                val += t;
                if (order >= 1) {
                    const cdouble tb = z * d1[at];
                    ga += cdouble(m * t.imag(), -m * t.real());  // (-i m) t
                    gb += tb;
                    gg += cdouble(mp * t.imag(), -mp * t.real());
                    if (order >= 2) {
                        haa += -static_cast<double>(m) * m * t;
                        hag += -static_cast<double>(m) * mp * t;
                        hgg += -static_cast<double>(mp) * mp * t;
                        hab += cdouble(m * tb.imag(), -m * tb.real());
                        hbg += cdouble(mp * tb.imag(), -mp * tb.real());
                        hbb += z * d2[at];
                    }
                }
            }
        }
    }

    CorrelationDerivatives out;
    out.value = val.real();
    out.imag = val.imag();
    if (order >= 1) out.grad = Eigen::Vector3d(ga.real(), gb.real(), gg.real());
    if (order >= 2) {
        out.hess << haa.real(), hab.real(), hag.real(),
                    hab.real(), hbb.real(), hbg.real(),
                    hag.real(), hbg.real(), hgg.real();
    }
    return out;
}

double evaluate(const XiBlocks& xi, const Rotation& g, int l_cut) {
    return correlation_derivatives(xi, g.euler_zyz(), l_cut, 0).value;
}

cdouble evaluate_complex(const XiBlocks& xi, const Rotation& g, int l_cut) {
    const auto r = correlation_derivatives(xi, g.euler_zyz(), l_cut, 0);
    return {r.value, r.imag};
}

Eigen::Vector3d gradient(const XiBlocks& xi, const Rotation& g, int l_cut) {
    const EulerZyz e = g.euler_zyz();
    if (near_pole(e.beta))
        throw gimbal_lock_error("gradient: beta within 1e-3 of a gimbal-lock pole");
    return correlation_derivatives(xi, e, l_cut, 1).grad;
}

Eigen::Matrix3d hessian(const XiBlocks& xi, const Rotation& g, int l_cut) {
    const EulerZyz e = g.euler_zyz();
    if (near_pole(e.beta))
        throw gimbal_lock_error("hessian: beta within 1e-3 of a gimbal-lock pole");
    return correlation_derivatives(xi, e, l_cut, 2).hess;
}

double energy_ratio(const XiBlocks& xi, int l_cut) {
    if (l_cut > xi.l_max()) throw std::invalid_argument("energy_ratio: l_cut exceeds band limit");
    const double total = xi.total_energy();
    if (!(total > 0.0)) throw std::domain_error("energy_ratio: zero kernel energy");
    double high = 0.0;
    for (int l = l_cut + 1; l <= xi.l_max(); ++l) high += xi.band_energy(l);
    return high / total;
}

double eval_cost_fraction(int l_cut, int l_max) {
    if (l_cut > l_max || l_cut < 0) throw std::invalid_argument("eval_cost_fraction: bad l_cut");
    auto terms = [](int l_hi) {
        double s = 0.0;
        for (int l = 0; l <= l_hi; ++l) s += static_cast<double>(2 * l + 1) * (2 * l + 1);
        return s;
    };
    return terms(l_cut) / terms(l_max);
}

XiBlocks xi_compose_right(const XiBlocks& xi, const Rotation& a, int l_limit) {
    const int top = l_limit < 0 ? xi.l_max() : std::min(l_limit, xi.l_max());
    const WignerStack da = wigner_D(top, a);
    XiBlocks out(xi.l_max(), xi.shift());
    for (int l = 0; l <= top; ++l) out.block(l) = xi.block(l) * da.blocks[l].transpose();
    return out;
}

WedgeMask::WedgeMask(int n, double theta_max_deg, const Eigen::Vector3d& tilt_axis)
    : m_n(n), m_theta_max_deg(theta_max_deg), m_tilt_axis(tilt_axis.normalized()) {
    if (!(theta_max_deg > 0.0) || theta_max_deg > 90.0)
        throw std::invalid_argument("WedgeMask: theta_max must be in (0, 90]");
    m_all_pass = theta_max_deg >= 90.0;
    m_tan_theta = std::tan(theta_max_deg * kPi / 180.0);
    const Eigen::Vector3d beam(0, 0, 1);
    Eigen::Vector3d perp = m_tilt_axis.cross(beam);
    if (perp.norm() < 1e-8)
        throw std::invalid_argument("WedgeMask: tilt axis must not be parallel to the beam");
    m_perp = perp.normalized();
}

bool WedgeMask::keeps(int fx, int fy, int fz) const {
    return keeps_direction(Eigen::Vector3d(fx, fy, fz));
}

bool WedgeMask::keeps_direction(const Eigen::Vector3d& nu) const {
    if (m_all_pass) return true;
    const double along_beam = std::abs(nu.z());
    const double in_plane = std::abs(nu.dot(m_perp));
    return along_beam <= m_tan_theta * in_plane;
}

double WedgeMask::kept_fraction() const {
    long kept = 0;
    const int h = m_n / 2;
    for (int fz = -h; fz < h; ++fz)
        for (int fy = -h; fy < h; ++fy)
            for (int fx = -h; fx < h; ++fx)
                if (keeps(fx, fy, fz)) ++kept;
    return static_cast<double>(kept) / (static_cast<double>(m_n) * m_n * m_n);
}

WedgeMask build_wedge_mask(int n, double theta_max_deg, const Eigen::Vector3d& tilt_axis) {
    return WedgeMask(n, theta_max_deg, tilt_axis);
}

double wedge_keep_profile(const WedgeMask& mask, const Eigen::Vector3d& nu, double taper_deg) {
    if (mask.theta_max_deg() >= 90.0) return 1.0;
    if (taper_deg <= 0.0) return mask.keeps_direction(nu) ? 1.0 : 0.0;
    const Eigen::Vector3d beam(0, 0, 1);
    const Eigen::Vector3d perp = mask.tilt_axis().cross(beam).normalized();
    const double along_beam = std::abs(nu.z());
    const double in_plane = std::abs(nu.dot(perp));
    if (along_beam == 0.0 && in_plane == 0.0) return 1.0;  // DC and the tilt axis line
    const double a = std::atan2(along_beam, in_plane) * 180.0 / kPi;
    const double x = (mask.theta_max_deg() - a) / taper_deg;
    if (x >= 1.0) return 1.0;
    if (x <= 0.0) return 0.0;
    return x * x * (3.0 - 2.0 * x);  // smoothstep
}

Volume apply_wedge_taper(const Volume& v, const WedgeMask& mask, double taper_deg) {
    if (mask.n() != v.n)
        throw std::invalid_argument("apply_wedge_taper: mask/volume size mismatch");
    const int n = v.n;
    const int nh = n / 2 + 1;
    std::vector<cdouble> spec(static_cast<std::size_t>(n) * n * nh);
    detail::dft_r2c_3d(n, v.data.data(), spec.data());
    auto signed_freq = [n](int i) { return i <= n / 2 ? i : i - n; };
    for (int z = 0; z < n; ++z) {
        const int fz = signed_freq(z);
        for (int y = 0; y < n; ++y) {
            const int fy = signed_freq(y);
            cdouble* row = spec.data() + (static_cast<std::size_t>(z) * n + y) * nh;
            for (int x = 0; x < nh; ++x)
                row[x] *= wedge_keep_profile(mask, Eigen::Vector3d(x, fy, fz), taper_deg);
        }
    }
    Volume out(n, v.voxel_size);
    detail::dft_c2r_3d(n, spec.data(), out.data.data());
    const double scale = 1.0 / (static_cast<double>(n) * n * n);
    for (double& d : out.data) d *= scale;
    return out;
}

XiBlocks wedge_power_kernel(const Volume& tmpl, const WedgeMask& mask, int l_max,
                            double taper_deg) {
    XiBlocks out(l_max, {0, 0, 0});
    if (mask.theta_max_deg() >= 90.0) return out;  // rho(g) = 0 identically

    // |T|^2 on a 2x zero-padded grid: the finer spectral lattice tames the
    // interpolation error of the speckled power along rays
    const int n = tmpl.n;
    const int np = 2 * n;
    const int nph = np / 2 + 1;
    std::vector<double> padded(static_cast<std::size_t>(np) * np * np, 0.0);
    const int off = n / 2;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                padded[(static_cast<std::size_t>(z + off) * np + (y + off)) * np + (x + off)] =
                    tmpl.at(x, y, z);
    std::vector<cdouble> half(static_cast<std::size_t>(np) * np * nph);
    detail::dft_r2c_3d(np, padded.data(), half.data());
    padded.clear();
    padded.shrink_to_fit();
    std::vector<double> power(static_cast<std::size_t>(np) * np * np);
    auto wrap = [np](int i) { return (i % np + np) % np; };
    for (int z = 0; z < np; ++z)
        for (int y = 0; y < np; ++y)
            for (int x = 0; x < np; ++x) {
                const std::size_t at = (static_cast<std::size_t>(z) * np + y) * np + x;
                if (x < nph) {
                    power[at] =
                        std::norm(half[(static_cast<std::size_t>(z) * np + y) * nph + x]);
                } else {
                    power[at] = std::norm(
                        half[(static_cast<std::size_t>(wrap(-z)) * np + wrap(-y)) * nph +
                             (np - x)]);
                }
            }
    power[0] = 0.0;  // DC carries no orientation information
    auto power_at = [&](double fx, double fy, double fz) {
        const int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy)),
                  iz = static_cast<int>(std::floor(fz));
        const double ux = fx - ix, uy = fy - iy, uz = fz - iz;
        double acc = 0.0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double w = (dx ? ux : 1 - ux) * (dy ? uy : 1 - uy) * (dz ? uz : 1 - uz);
                    acc += w * power[(static_cast<std::size_t>(wrap(iz + dz)) * np +
                                      wrap(iy + dy)) *
                                         np +
                                     wrap(ix + dx)];
                }
        return acc;
    };

    // directional spectral power Q and the wedge profile on a sphere grid;
    // oversampled so the analysis of the tapered edge stays alias-free
    const int n_theta = 3 * (l_max + 1);
    const int n_phi = 3 * (l_max + 1);
    const int n_rad = 2 * n;
    const auto gu = detail::gauss_legendre(n_theta);
    std::vector<double> q(static_cast<std::size_t>(n_theta) * n_phi);
    std::vector<double> chi(static_cast<std::size_t>(n_theta) * n_phi);
    const double r_max = np / 2.0;  // padded-lattice Nyquist
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int t = 0; t < n_theta; ++t) {
        const double u = gu.nodes[t];
        const double st = std::sqrt(std::max(0.0, 1.0 - u * u));
        for (int p = 0; p < n_phi; ++p) {
            const double phi = 2.0 * kPi * p / n_phi;
            const Eigen::Vector3d dir(st * std::cos(phi), st * std::sin(phi), u);
            double acc = 0.0;
            for (int j = 0; j < n_rad; ++j) {
                const double r = (j + 0.5) * r_max / n_rad;
                acc += r * r * power_at(r * dir.x(), r * dir.y(), r * dir.z());
            }
            q[static_cast<std::size_t>(t) * n_phi + p] = acc;
            chi[static_cast<std::size_t>(t) * n_phi + p] =
                1.0 - wedge_keep_profile(mask, dir, taper_deg);
        }
    }

    // spherical-harmonic analysis of both fields up to l_max
    const std::size_t n_tri = detail::tri_count(l_max);
    std::vector<cdouble> q_hat(n_tri), chi_hat(n_tri);
    std::vector<double> ptab(n_tri);
    double total = 0.0;
    const double wphi = 2.0 * kPi / n_phi;
    for (int t = 0; t < n_theta; ++t) {
        detail::legendre_table(l_max, gu.nodes[t], ptab.data());
        const double wt = gu.weights[t];
        for (int m = 0; m <= l_max; ++m) {
            cdouble gq{0, 0}, gc{0, 0};
            for (int p = 0; p < n_phi; ++p) {
                const cdouble e = std::polar(1.0, -m * (2.0 * kPi * p / n_phi));
                gq += q[static_cast<std::size_t>(t) * n_phi + p] * e;
                gc += chi[static_cast<std::size_t>(t) * n_phi + p] * e;
            }
            for (int l = m; l <= l_max; ++l) {
                const double pw = ptab[detail::tri_index(l, m)] * wt * wphi;
                q_hat[detail::tri_index(l, m)] += gq * pw;
                chi_hat[detail::tri_index(l, m)] += gc * pw;
            }
        }
        for (int p = 0; p < n_phi; ++p)
            total += q[static_cast<std::size_t>(t) * n_phi + p] * wt * wphi;
    }
    if (!(total > 0.0)) return out;

    // xi_l[m,m'] = conj(chi_hat_lm) q_hat_lm' / total; negative orders via
    // the real-field symmetry f_hat(l,-m) = (-1)^m conj(f_hat(l,m))
    auto coef = [&](const std::vector<cdouble>& hat, int l, int m) {
        if (m >= 0) return hat[detail::tri_index(l, m)];
        const cdouble c = std::conj(hat[detail::tri_index(l, -m)]);
        return (-m) % 2 ? -c : c;
    };
    for (int l = 0; l <= l_max; ++l)
        for (int m = -l; m <= l; ++m)
            for (int mp = -l; mp <= l; ++mp)
                out.block(l)(m + l, mp + l) =
                    std::conj(coef(chi_hat, l, m)) * coef(q_hat, l, mp) / total;
    return out;
}

Volume apply_wedge(const Volume& v, const WedgeMask& mask) {
    if (mask.n() != v.n) throw std::invalid_argument("apply_wedge: mask/volume size mismatch");
    const int n = v.n;
    const int nh = n / 2 + 1;
    std::vector<cdouble> spec(static_cast<std::size_t>(n) * n * nh);
    detail::dft_r2c_3d(n, v.data.data(), spec.data());
    auto signed_freq = [n](int i) { return i <= n / 2 ? i : i - n; };
    for (int z = 0; z < n; ++z) {
        const int fz = signed_freq(z);
        for (int y = 0; y < n; ++y) {
            const int fy = signed_freq(y);
            cdouble* row = spec.data() + (static_cast<std::size_t>(z) * n + y) * nh;
            for (int x = 0; x < nh; ++x) {
                if (!mask.keeps(x, fy, fz)) row[x] = {0.0, 0.0};
            }
        }
    }
    Volume out(n, v.voxel_size);
    detail::dft_c2r_3d(n, spec.data(), out.data.data());
    const double scale = 1.0 / (static_cast<double>(n) * n * n);
    for (double& d : out.data) d *= scale;
    return out;
}

}  // namespace ballmatch
