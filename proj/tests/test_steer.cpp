#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ballmatch/basis.hpp"
#include "ballmatch/philox.hpp"
#include "ballmatch/steer.hpp"
#include "ballmatch/volio.hpp"
#include "oracles.hpp"

using namespace ballmatch;
constexpr double kPi = std::numbers::pi;

TEST_CASE("rotation basics: euler round trip, composition, sign") {
    PhiloxStream rng(21, 0);
    for (int t = 0; t < 50; ++t) {
        const Rotation g = haar_rotation(rng);
        const EulerZyz e = g.euler_zyz();
        CHECK(e.beta >= 0.0);
        CHECK(e.beta <= kPi);
        const Rotation back = Rotation::from_euler_zyz(e);
        CHECK(g.angle_to(back) < 1e-10);

        const Rotation neg(-g.w(), -g.x(), -g.y(), -g.z());
        CHECK(g.angle_to(neg) == doctest::Approx(0.0).epsilon(1e-12));
    }
    // matrix of a composition equals the product of matrices
    PhiloxStream rng2(22, 0);
    for (int t = 0; t < 20; ++t) {
        const Rotation a = haar_rotation(rng2), b = haar_rotation(rng2);
        CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
    }
    // poles round-trip too
    for (double beta : {0.0, kPi}) {
        const Rotation g = Rotation::from_euler_zyz(0.4, beta, 0.0);
        CHECK(g.angle_to(Rotation::from_euler_zyz(g.euler_zyz())) < 1e-10);
    }
}

TEST_CASE("wigner_d_small: pinned values and factorial-sum oracle") {
    CHECK(wigner_d_small(0, 1.234)(0, 0) == doctest::Approx(1.0));
    const double beta = kPi / 3.0;
    CHECK(wigner_d_small(1, beta)(1, 1) == doctest::Approx(std::cos(beta)).epsilon(1e-14));

    PhiloxStream rng(31, 0);
    for (int l : {2, 3, 5, 8, 10}) {
        const double b = rng.next_uniform(0.05, kPi - 0.05);
        const Eigen::MatrixXd d = wigner_d_small(l, b);
        for (int m = -l; m <= l; ++m)
            for (int mp = -l; mp <= l; ++mp)
                CHECK(d(m + l, mp + l) ==
                      doctest::Approx(oracles::wigner_d_sum(l, m, mp, b)).epsilon(1e-10));
    }
    // explicit l=5 value straight from the sum (derived oracle of the spec)
    CHECK(wigner_d_small(5, 0.7)(2 + 5, -1 + 5) ==
          doctest::Approx(oracles::wigner_d_sum(5, 2, -1, 0.7)).epsilon(1e-10));

    // orthogonality up to the working band limit
    for (int l : {15, 30, 42}) {
        const Eigen::MatrixXd d = wigner_d_small(l, 1.1);
        const Eigen::MatrixXd eye = d * d.transpose();
        CHECK((eye - Eigen::MatrixXd::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("wigner_D: identity, unitarity, homomorphism") {
    const WignerStack id = wigner_D(6, Rotation::identity());
    for (int l = 0; l <= 6; ++l)
        CHECK((id[l] - Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff() <
              1e-12);

    PhiloxStream rng(32, 0);
    const int l_max = 42;
    for (int t = 0; t < 3; ++t) {
        const Rotation g = haar_rotation(rng);
        const WignerStack d = wigner_D(l_max, g);
        for (int l : {1, 7, 20, 42}) {
            const Eigen::MatrixXcd u = d[l] * d[l].adjoint();
            CHECK((u - Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff() <
                  1e-10);
        }
    }
    for (int t = 0; t < 5; ++t) {
        const Rotation g1 = haar_rotation(rng), g2 = haar_rotation(rng);
        const WignerStack a = wigner_D(l_max, g1), b = wigner_D(l_max, g2),
                          c = wigner_D(l_max, g1 * g2);
        for (int l : {1, 3, 13, 42})
            CHECK((a[l] * b[l] - c[l]).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("wigner_D_grad: closed form vs finite differences") {
    const WignerGradient z = wigner_D_grad(0, Rotation::from_euler_zyz(0.3, 1.0, -0.4));
    CHECK(std::abs(z.d_alpha[0](0, 0)) == 0.0);
    CHECK(std::abs(z.d_beta[0](0, 0)) == 0.0);
    CHECK(std::abs(z.d_gamma[0](0, 0)) == 0.0);

    PhiloxStream rng(33, 0);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const int l = rng.next_int(1, 6);
        const Rotation g = oracles::rotation_away_from_poles(haar_rotation(rng));
        const EulerZyz e = g.euler_zyz();
        const WignerGradient grad = wigner_D_grad(l, g);
        // m = 0 row of the alpha derivative vanishes
        for (int mp = -l; mp <= l; ++mp) CHECK(std::abs(grad.d_alpha[l](l, mp + l)) < 1e-14);

        const WignerStack* stacks[3] = {&grad.d_alpha, &grad.d_beta, &grad.d_gamma};
        for (int axis = 0; axis < 3; ++axis) {
            auto at = [&](double da, double db, double dg) {
                return wigner_D(l, Rotation::from_euler_zyz(e.alpha + da, e.beta + db,
                                                            e.gamma + dg))[l];
            };
            Eigen::MatrixXcd hi, lo;
            if (axis == 0) { hi = at(h, 0, 0); lo = at(-h, 0, 0); }
            else if (axis == 1) { hi = at(0, h, 0); lo = at(0, -h, 0); }
            else { hi = at(0, 0, h); lo = at(0, 0, -h); }
            const Eigen::MatrixXcd fd = (hi - lo) / (2.0 * h);
            const double scale = std::max(1e-12, fd.cwiseAbs().maxCoeff());
            CHECK(((*stacks[axis])[l] - fd).cwiseAbs().maxCoeff() / scale < 1e-6);
        }
    }
}

TEST_CASE("rotate_expansion: identity, homomorphism, norm, reality") {
    const Volume v = oracles::smooth_blob_volume(48, 99);
    const BasisSpec spec = build_spec(12, default_lambda_cut(48, 12));
    const BallExpansion e = expand(v, spec);

    const BallExpansion same = rotate_expansion(e, Rotation::identity());
    for (std::size_t i = 0; i < e.coeffs().size(); ++i)
        CHECK(std::abs(same.coeffs()[i] - e.coeffs()[i]) < 1e-12);

    PhiloxStream rng(34, 0);
    for (int t = 0; t < 5; ++t) {
        const Rotation g1 = haar_rotation(rng), g2 = haar_rotation(rng);
        const BallExpansion a = rotate_expansion(rotate_expansion(e, g1), g2);
        const BallExpansion b = rotate_expansion(e, g2 * g1);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < a.coeffs().size(); ++i)
            max_diff = std::max(max_diff, std::abs(a.coeffs()[i] - b.coeffs()[i]));
        CHECK(max_diff < 1e-10);

        CHECK(rotate_expansion(e, g1).norm() == doctest::Approx(e.norm()).epsilon(1e-10));

        // reality closure
        const BallExpansion r = rotate_expansion(e, g1);
        CHECK(r.real_volume());
        for (int l = 0; l <= spec.l_max(); ++l)
            for (int k = 1; k <= spec.radial_count(l); ++k)
                for (int m = 0; m <= l; ++m) {
                    const cdouble want = std::conj(r[{k, l, m}]) * (m % 2 ? -1.0 : 1.0);
                    CHECK(std::abs(r[{k, l, -m}] - want) < 1e-10);
                }
    }
}

TEST_CASE("steering matches the trilinear voxel-rotation oracle") {
    const Volume v = oracles::smooth_blob_volume(64, 4242);
    const BasisSpec spec = build_spec(24, default_lambda_cut(64, 24));
    const BallExpansion e = expand(v, spec);
    const Volume recon = synthesize(e, 64);

    PhiloxStream rng(35, 0);
    for (int t = 0; t < 5; ++t) {
        const Rotation g = haar_rotation(rng);
        const Volume steered = synthesize(rotate_expansion(e, g), 64);
        const Volume oracle = rotate_volume_trilinear(recon, g);
        double num = 0.0, den = 0.0;
        for (int z = 0; z < 64; ++z)
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) {
                    const double cx = v.coord(x), cy = v.coord(y), cz = v.coord(z);
                    if (cx * cx + cy * cy + cz * cz >= 0.94) continue;  // stay off the rim
                    const double d = steered.at(x, y, z) - oracle.at(x, y, z);
                    num += d * d;
                    den += oracle.at(x, y, z) * oracle.at(x, y, z);
                }
        CHECK(std::sqrt(num / den) < 0.02);
    }
}
