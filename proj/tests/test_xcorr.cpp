#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ballmatch/basis.hpp"
#include "ballmatch/philox.hpp"
#include "ballmatch/steer.hpp"
#include "ballmatch/volio.hpp"
#include "ballmatch/xcorr.hpp"
#include "oracles.hpp"

using namespace ballmatch;
constexpr double kPi = std::numbers::pi;

namespace {

struct Fixture {
    Volume tmpl, sub;
    BasisSpec spec;
    BallExpansion t_hat, f_hat;
    XiBlocks xi;

    explicit Fixture(int n = 48, int l_max = 10, std::uint64_t seed = 1234,
                     bool rotated = true) {
        PhantomSpec ps;
        ps.n = n;
        ps.blobs = 4;
        ps.seed = seed;
        PhiloxStream rng(seed, 17);
        ps.rotation = rotated ? haar_rotation(rng) : Rotation::identity();
        ps.shift = {{0, 0, 0}};
        Phantom ph = make_phantom(ps);
        tmpl = ph.tmpl;
        sub = ph.subtomo;
        spec = build_spec(l_max, default_lambda_cut(n, l_max));
        t_hat = expand(tmpl, spec);
        f_hat = expand(sub, spec);
        xi = xi_coefficients(t_hat, f_hat);
    }
};

// coefficient-space inner product <t, D(g) f>, independent of XiBlocks
cdouble steering_inner_product(const BallExpansion& t, const BallExpansion& f,
                               const Rotation& g, int l_cut) {
    const BallExpansion rf = rotate_expansion(f, g);
    cdouble acc{0, 0};
    const BasisSpec& spec = t.spec();
    for (int l = 0; l <= l_cut; ++l)
        for (int k = 1; k <= spec.radial_count(l); ++k)
            for (int m = -l; m <= l; ++m)
                acc += std::conj(t[{k, l, m}]) * rf[{k, l, m}];
    return acc;
}

}  // namespace

TEST_CASE("xi: self-correlation at identity and zero template") {
    Fixture fx(48, 8, 77, false);
    const XiBlocks self = xi_coefficients(fx.t_hat, fx.t_hat);
    const double at_id = evaluate(self, Rotation::identity(), fx.spec.l_max());
    CHECK(at_id == doctest::Approx(fx.t_hat.energy()).epsilon(1e-12));

    BallExpansion zero(fx.spec, true);
    const XiBlocks xz = xi_coefficients(zero, fx.f_hat);
    CHECK(xz.total_energy() == 0.0);

    const BasisSpec other = build_spec(5, 8.0);
    BallExpansion mismatched(other, true);
    CHECK_THROWS_AS(xi_coefficients(fx.t_hat, mismatched), std::invalid_argument);
}

TEST_CASE("xi contraction equals the steering inner-product oracle") {
    Fixture fx;
    PhiloxStream rng(9, 0);
    for (int t = 0; t < 10; ++t) {
        const Rotation g = haar_rotation(rng);
        for (int l_cut : {0, 3, fx.spec.l_max()}) {
            const cdouble direct = steering_inner_product(fx.t_hat, fx.f_hat, g, l_cut);
            const cdouble viaxi = evaluate_complex(fx.xi, g, l_cut);
            CHECK(std::abs(viaxi - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("evaluate: truncation at l_cut=0, band additivity, imaginary diagnostic") {
    Fixture fx;
    PhiloxStream rng(10, 0);
    const double c0 = evaluate(fx.xi, haar_rotation(rng), 0);
    const double c0b = evaluate(fx.xi, haar_rotation(rng), 0);
    CHECK(c0 == doctest::Approx(c0b).epsilon(1e-14));  // constant in g
    CHECK(c0 == doctest::Approx(fx.xi.block(0)(0, 0).real()).epsilon(1e-12));

    // band additivity: C(l) - C(l-1) equals the degree-l block contribution
    const Rotation g = haar_rotation(rng);
    const WignerStack d = wigner_D(fx.spec.l_max(), g);
    for (int l = 1; l <= fx.spec.l_max(); ++l) {
        const double delta = evaluate(fx.xi, g, l) - evaluate(fx.xi, g, l - 1);
        const double block = (fx.xi.block(l).array() * d[l].array()).sum().real();
        CHECK(delta == doctest::Approx(block).epsilon(1e-9));
    }

    const cdouble full = evaluate_complex(fx.xi, g, fx.spec.l_max());
    CHECK(std::abs(full.imag()) < 1e-8 * std::max(1.0, std::abs(full.real())));
}

TEST_CASE("evaluate vs brute-force voxel-domain correlation") {
    // smooth content so the trilinear oracle itself stays accurate
    const int n = 64;
    const Volume tv = oracles::smooth_blob_volume(n, 555);
    const Volume fv = oracles::smooth_blob_volume(n, 556);
    const BasisSpec spec = build_spec(16, default_lambda_cut(n, 16));
    const BallExpansion t_hat = expand(tv, spec);
    const BallExpansion f_hat = expand(fv, spec);
    const XiBlocks xi = xi_coefficients(t_hat, f_hat);
    PhiloxStream rng(11, 0);
    const Volume t_recon = synthesize(t_hat, n);
    const Volume f_recon = synthesize(f_hat, n);
    const double h3 = std::pow(2.0 / n, 3);
    for (int trial = 0; trial < 3; ++trial) {
        const Rotation g = haar_rotation(rng);
        const double via_xi = evaluate(xi, g, spec.l_max());
        // rotate the second volume (kernel convention), voxelwise inner product
        const Volume rot = rotate_volume_trilinear(f_recon, g);
        double dot = 0.0;
        for (std::size_t i = 0; i < rot.data.size(); ++i) dot += t_recon.data[i] * rot.data[i];
        dot *= h3;
        CHECK(via_xi == doctest::Approx(dot).epsilon(0.02));
    }
}

TEST_CASE("self-correlation peaks at the identity") {
    Fixture fx(48, 8, 321, false);
    const XiBlocks self = xi_coefficients(fx.t_hat, fx.t_hat);
    const double peak = evaluate(self, Rotation::identity(), 8);
    PhiloxStream rng(12, 0);
    for (int t = 0; t < 1000; ++t)
        CHECK(evaluate(self, haar_rotation(rng), 8) <= peak + 1e-12);
}

TEST_CASE("gradient and hessian against finite differences") {
    Fixture fx;
    PhiloxStream rng(13, 0);
    const int l_cut = fx.spec.l_max();

    // l_cut = 0: flat in g
    const Rotation g0 = oracles::rotation_away_from_poles(haar_rotation(rng));
    CHECK(gradient(fx.xi, g0, 0).norm() == 0.0);
    CHECK(hessian(fx.xi, g0, 0).norm() == 0.0);

    for (int t = 0; t < 20; ++t) {
        const Rotation g = oracles::rotation_away_from_poles(haar_rotation(rng));
        const EulerZyz e = g.euler_zyz();
        auto f = [&](const std::array<double, 3>& a) {
            return correlation_derivatives(fx.xi, {a[0], a[1], a[2]}, l_cut, 0).value;
        };
        const Eigen::Vector3d an = gradient(fx.xi, g, l_cut);
        const std::array<double, 3> x{e.alpha, e.beta, e.gamma};
        double scale = std::max({1e-12, std::abs(an[0]), std::abs(an[1]), std::abs(an[2])});
        for (int axis = 0; axis < 3; ++axis) {
            const double fd = oracles::central_diff(f, x, axis, 1e-5);
            CHECK(std::abs(an[axis] - fd) / scale < 1e-5);
        }

        const Eigen::Matrix3d h = hessian(fx.xi, g, l_cut);
        CHECK((h - h.transpose()).norm() < 1e-8);
        for (int axis = 0; axis < 3; ++axis) {
            auto grad_axis = [&](const std::array<double, 3>& a) {
                return correlation_derivatives(fx.xi, {a[0], a[1], a[2]}, l_cut, 1)
                    .grad(axis);
            };
            for (int axis2 = 0; axis2 < 3; ++axis2) {
                const double fd = oracles::central_diff(grad_axis, x, axis2, 1e-4);
                const double hscale = std::max(1e-12, h.cwiseAbs().maxCoeff());
                CHECK(std::abs(h(axis, axis2) - fd) / hscale < 1e-4);
            }
        }
    }
}

TEST_CASE("gimbal lock is signaled distinctly") {
    Fixture fx(48, 6, 88, false);
    const Rotation pole = Rotation::from_euler_zyz(0.3, 5e-4, 0.1);
    CHECK_THROWS_AS(gradient(fx.xi, pole, 4), gimbal_lock_error);
    CHECK_THROWS_AS(hessian(fx.xi, pole, 4), gimbal_lock_error);
    const Rotation near_pi = Rotation::from_euler_zyz(0.3, kPi - 5e-4, 0.1);
    CHECK_THROWS_AS(gradient(fx.xi, near_pi, 4), gimbal_lock_error);
}

TEST_CASE("stationarity and negative curvature at the self-correlation maximum") {
    Fixture fx(48, 8, 99, false);
    const XiBlocks self = xi_coefficients(fx.t_hat, fx.t_hat);
    // identity is a pole in ZYZ; probe through a rotated chart instead
    const Rotation anchor = Rotation::from_euler_zyz(0.0, kPi / 2.0, 0.0);
    const XiBlocks anchored = xi_compose_right(self, anchor);
    const Rotation h0 = anchor.inverse();  // the maximum in the anchored chart
    const double c = evaluate(anchored, h0, 8);
    const Eigen::Vector3d grad_at_max = gradient(anchored, h0, 8);
    CHECK(grad_at_max.norm() < 1e-6 * std::abs(c));
    const Eigen::Matrix3d h = hessian(anchored, h0, 8);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
    for (int i = 0; i < 3; ++i) CHECK(es.eigenvalues()[i] <= 1e-8 * std::abs(c));
}

TEST_CASE("energy_ratio: formula, monotonicity, errors") {
    Fixture fx;
    const int l_max = fx.spec.l_max();
    CHECK(energy_ratio(fx.xi, l_max) == 0.0);

    // independent two-pass oracle
    for (int l_cut : {0, 2, 5, l_max}) {
        double high = 0.0, total = 0.0;
        for (int l = 0; l <= l_max; ++l) {
            const auto& b = fx.xi.block(l);
            for (int r = 0; r < b.rows(); ++r)
                for (int c = 0; c < b.cols(); ++c) {
                    const double e = std::norm(b(r, c));
                    total += e;
                    if (l > l_cut) high += e;
                }
        }
        CHECK(energy_ratio(fx.xi, l_cut) == doctest::Approx(high / total).epsilon(1e-12));
    }

    double prev = 1.1;
    for (int l = 0; l <= l_max; ++l) {
        const double r = energy_ratio(fx.xi, l);
        CHECK(r >= 0.0);
        CHECK(r <= prev + 1e-15);
        prev = r;
    }

    XiBlocks empty(3, {0, 0, 0});
    CHECK_THROWS_AS(energy_ratio(empty, 1), std::domain_error);
}

TEST_CASE("eval_cost_fraction") {
    CHECK(eval_cost_fraction(5, 5) == doctest::Approx(1.0));
    CHECK(eval_cost_fraction(0, 1) == doctest::Approx(0.1));
    double num = 0.0, den = 0.0;
    for (int l = 0; l <= 42; ++l) {
        const double t = static_cast<double>(2 * l + 1) * (2 * l + 1);
        if (l <= 7) num += t;
        den += t;
    }
    CHECK(eval_cost_fraction(7, 42) == doctest::Approx(num / den).epsilon(1e-14));
}

TEST_CASE("wedge mask: geometry, symmetry, kept fraction") {
    const WedgeMask open = build_wedge_mask(32, 90.0);
    for (int f = -16; f < 16; ++f) CHECK(open.keeps(f, 3, -7));

    const int n = 64;
    const WedgeMask m = build_wedge_mask(n, 60.0);
    CHECK(m.keeps(0, 0, 0));  // DC
    PhiloxStream rng(14, 0);
    for (int t = 0; t < 200; ++t) {
        const int fx = rng.next_int(-n / 2, n / 2 - 1);
        const int fy = rng.next_int(-n / 2, n / 2 - 1);
        const int fz = rng.next_int(-n / 2, n / 2 - 1);
        CHECK(m.keeps(fx, fy, fz) == m.keeps(-fx, -fy, -fz));
    }

    // voxel-counting oracle inside the in-plane Nyquist disc
    long kept = 0, total = 0;
    for (int fz = -n / 2; fz < n / 2; ++fz)
        for (int fy = -n / 2; fy < n / 2; ++fy)
            for (int fx = -n / 2; fx < n / 2; ++fx) {
                if (fx * fx + fz * fz > (n / 2) * (n / 2)) continue;  // tilt axis is y
                ++total;
                if (m.keeps(fx, fy, fz)) ++kept;
            }
    CHECK(static_cast<double>(kept) / total ==
          doctest::Approx(2.0 * 60.0 / 180.0).epsilon(0.02));
}

TEST_CASE("tapered wedge filter and keep profile") {
    const WedgeMask m = build_wedge_mask(32, 60.0);
    // taper 0 reproduces the binary projector exactly
    PhantomSpec ps;
    ps.n = 32;
    ps.blobs = 3;
    ps.seed = 91;
    ps.rotation = Rotation::identity();
    ps.shift = {{0, 0, 0}};
    const Volume v = make_phantom(ps).tmpl;
    const Volume sharp = apply_wedge(v, m);
    const Volume taper0 = apply_wedge_taper(v, m, 0.0);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::abs(sharp.data[i] - taper0.data[i]) < 1e-10);

    // profile: 1 well inside, 0 in the wedge, monotone across the edge
    CHECK(wedge_keep_profile(m, {1, 0, 0}, 6.0) == 1.0);
    CHECK(wedge_keep_profile(m, {0, 0, 1}, 6.0) == 0.0);
    CHECK(wedge_keep_profile(m, {0, 0, 0}, 6.0) == 1.0);  // DC
    double prev = 1.0;
    for (double a = 50.0; a <= 64.0; a += 0.5) {
        const double rad = a * kPi / 180.0;
        const double s =
            wedge_keep_profile(m, {std::cos(rad), 0.0, std::sin(rad)}, 6.0);
        CHECK(s <= prev + 1e-12);
        prev = s;
    }

    // tapered output never carries more energy than the input
    const Volume soft = apply_wedge_taper(v, m, 6.0);
    double es = 0.0, ev = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        es += soft.data[i] * soft.data[i];
        ev += v.data[i] * v.data[i];
    }
    CHECK(es <= ev);
}

TEST_CASE("wedge power kernel tracks the masked rotated-template power") {
    PhantomSpec ps;
    ps.n = 48;
    ps.blobs = 4;
    ps.seed = 2718;
    ps.rotation = Rotation::identity();
    ps.shift = {{0, 0, 0}};
    const Volume t = make_phantom(ps).tmpl;
    const WedgeMask mask = build_wedge_mask(48, 60.0);
    const XiBlocks wp = wedge_power_kernel(t, mask, 16);

    PhiloxStream rng(15, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Rotation g = haar_rotation(rng);
        const double rho = evaluate(wp, g, 16);
        CHECK(rho > 0.0);
        CHECK(rho < 1.0);
        // trilinear voxel oracle with the same taper profile
        const Volume rot = rotate_volume_trilinear(t, g);
        const Volume srot = apply_wedge_taper(rot, mask);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < rot.data.size(); ++i) {
            num += srot.data[i] * rot.data[i];
            den += rot.data[i] * rot.data[i];
        }
        CHECK(std::abs(rho - (1.0 - num / den)) < 0.05);
    }

    // open mask: no power is ever removed
    const XiBlocks open = wedge_power_kernel(t, build_wedge_mask(48, 90.0), 16);
    CHECK(open.total_energy() == 0.0);
}

TEST_CASE("apply_wedge: projector properties") {
    PhantomSpec ps;
    ps.n = 32;
    ps.blobs = 3;
    ps.seed = 2024;
    ps.rotation = Rotation::identity();
    ps.shift = {{0, 0, 0}};
    const Volume v = make_phantom(ps).tmpl;

    const WedgeMask open = build_wedge_mask(32, 90.0);
    const Volume same = apply_wedge(v, open);
    double dmax = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i)
        dmax = std::max(dmax, std::abs(same.data[i] - v.data[i]));
    CHECK(dmax < 1e-10);

    const WedgeMask m = build_wedge_mask(32, 60.0);
    const Volume once = apply_wedge(v, m);
    const Volume twice = apply_wedge(once, m);
    dmax = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i)
        dmax = std::max(dmax, std::abs(twice.data[i] - once.data[i]));
    CHECK(dmax < 1e-10);

    // Parseval: ||P v||^2 equals the kept spectral energy / N^3, with the
    // spectrum computed by a test-side separable naive DFT (not FFTW)
    const int n = 32;
    std::vector<cdouble> spec(v.data.begin(), v.data.end());
    auto dft_axis = [&](int axis) {
        std::vector<cdouble> out_line(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                std::vector<cdouble> buf(n);
                for (int c = 0; c < n; ++c) {
                    const int idx[3] = {axis == 0 ? c : a, axis == 1 ? c : (axis == 0 ? a : b),
                                        axis == 2 ? c : b};
                    buf[c] = spec[(static_cast<std::size_t>(idx[2]) * n + idx[1]) * n + idx[0]];
                }
                for (int kf = 0; kf < n; ++kf) {
                    cdouble acc{0, 0};
                    for (int c = 0; c < n; ++c)
                        acc += buf[c] * std::polar(1.0, -2.0 * kPi * kf * c / n);
                    out_line[kf] = acc;
                }
                for (int kf = 0; kf < n; ++kf) {
                    const int idx[3] = {axis == 0 ? kf : a, axis == 1 ? kf : (axis == 0 ? a : b),
                                        axis == 2 ? kf : b};
                    spec[(static_cast<std::size_t>(idx[2]) * n + idx[1]) * n + idx[0]] =
                        out_line[kf];
                }
            }
    };
    dft_axis(0);
    dft_axis(1);
    dft_axis(2);
    auto signed_freq = [&](int i) { return i <= n / 2 ? i : i - n; };
    double kept_energy = 0.0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                if (m.keeps(signed_freq(x), signed_freq(y), signed_freq(z)))
                    kept_energy += std::norm(spec[(static_cast<std::size_t>(z) * n + y) * n + x]);
    double pv2 = 0.0;
    for (double d : once.data) pv2 += d * d;
    CHECK(pv2 == doctest::Approx(kept_energy / (static_cast<double>(n) * n * n)).epsilon(1e-8));

    // self-adjointness: <Pv, w> = <v, Pw>
    PhantomSpec ps2 = ps;
    ps2.seed = 2025;
    const Volume w = make_phantom(ps2).tmpl;
    const Volume pw = apply_wedge(w, m);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        a += once.data[i] * w.data[i];
        b += v.data[i] * pw.data[i];
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-8));

    Volume wrong(16);
    CHECK_THROWS_AS(apply_wedge(wrong, m), std::invalid_argument);
}
