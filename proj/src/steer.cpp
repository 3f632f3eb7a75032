#include "ballmatch/steer.hpp"

#include <cmath>
#include <stdexcept>

namespace ballmatch {

namespace detail {

namespace {

// value and first two beta-derivatives of cos(b/2)^a * sin(b/2)^p
struct Tri {
    double v = 0, d1 = 0, d2 = 0;
};

double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

Tri cs_power(int a, int p, double c, double s) {
    Tri t;
    t.v = ipow(c, a) * ipow(s, p);
    const double tb = p ? p * ipow(c, a + 1) * ipow(s, p - 1) : 0.0;
    const double ta = a ? a * ipow(c, a - 1) * ipow(s, p + 1) : 0.0;
    t.d1 = 0.5 * (tb - ta);
    const double t2b = p > 1 ? p * (p - 1.0) * ipow(c, a + 2) * ipow(s, p - 2) : 0.0;
    const double t2a = a > 1 ? a * (a - 1.0) * ipow(c, a - 2) * ipow(s, p + 2) : 0.0;
    t.d2 = 0.25 * (t2b + t2a - (2.0 * a * p + a + p) * t.v);
    return t;
}

double sqrt_binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
    return std::sqrt(r);
}

}  // namespace

LittleDStack little_d_stack(int l_max, double beta, int order) {
    LittleDStack st;
    st.l_max = l_max;
    st.order = order;
    st.value.resize(l_max + 1);
    if (order >= 1) st.d1.resize(l_max + 1);
    if (order >= 2) st.d2.resize(l_max + 1);

    const double cb = std::cos(beta);
    const double sb = std::sin(beta);
    const double ch = std::cos(0.5 * beta);
    const double sh = std::sin(0.5 * beta);

    for (int l = 0; l <= l_max; ++l) {
        const int w = 2 * l + 1;
        st.value[l].assign(static_cast<std::size_t>(w) * w, 0.0);
        if (order >= 1) st.d1[l].assign(static_cast<std::size_t>(w) * w, 0.0);
        if (order >= 2) st.d2[l].assign(static_cast<std::size_t>(w) * w, 0.0);
    }
    st.value[0][0] = 1.0;
    if (l_max == 0) return st;

    auto put = [&](int l, int m, int mp, const Tri& t) {
        const int w = 2 * l + 1;
        const std::size_t at = static_cast<std::size_t>(m + l) * w + (mp + l);
        st.value[l][at] = t.v;
        if (order >= 1) st.d1[l][at] = t.d1;
        if (order >= 2) st.d2[l][at] = t.d2;
    };

    for (int l = 1; l <= l_max; ++l) {
        const int w = 2 * l + 1;
        // closed-form borders: single-term Wigner sum at |m| = l or |m'| = l
        for (int mp = -l; mp <= l; ++mp) {
            const double k = sqrt_binom(2 * l, l + mp);
            const double sign = ((l - mp) % 2) ? -1.0 : 1.0;
            Tri top = cs_power(l + mp, l - mp, ch, sh);  // d_{l,mp}
            top.v *= sign * k, top.d1 *= sign * k, top.d2 *= sign * k;
            put(l, l, mp, top);
            Tri bot = cs_power(l - mp, l + mp, ch, sh);  // d_{-l,mp}
            bot.v *= k, bot.d1 *= k, bot.d2 *= k;
            put(l, -l, mp, bot);
        }
        for (int m = -l + 1; m <= l - 1; ++m) {
            const double k = sqrt_binom(2 * l, l + m);
            Tri right = cs_power(l + m, l - m, ch, sh);  // d_{m,l} = (-1)^{m-l} d_{l,m}
            right.v *= k, right.d1 *= k, right.d2 *= k;
            put(l, m, l, right);
            const double sign = ((l + m) % 2) ? -1.0 : 1.0;
            Tri left = cs_power(l - m, l + m, ch, sh);  // d_{m,-l} = (-1)^{m+l} d_{-l,m}
            left.v *= sign * k, left.d1 *= sign * k, left.d2 *= sign * k;
            put(l, m, -l, left);
        }
        if (l == 1) {
            Tri center{cb, -sb, -cb};
            put(1, 0, 0, center);
            continue;
        }
        // three-term recursion over degree for the interior
        const int w1 = 2 * l - 1, w2 = 2 * l - 3;
        const double* p1v = st.value[l - 1].data();
        const double* p2v = st.value[l - 2].data();
        const double* p1d = order >= 1 ? st.d1[l - 1].data() : nullptr;
        const double* p2d = order >= 1 ? st.d1[l - 2].data() : nullptr;
        const double* p1h = order >= 2 ? st.d2[l - 1].data() : nullptr;
        const double* p2h = order >= 2 ? st.d2[l - 2].data() : nullptr;
        for (int m = -(l - 1); m <= l - 1; ++m) {
            for (int mp = -(l - 1); mp <= l - 1; ++mp) {
                const double a = std::sqrt((static_cast<double>(l) * l - static_cast<double>(m) * m) *
                                           (static_cast<double>(l) * l - static_cast<double>(mp) * mp));
                const double denom = (l - 1.0) * a;
                const double t1 = (2.0 * l - 1.0) * (l * (l - 1.0) * cb - static_cast<double>(m) * mp) / denom;
                const double t1p = -(2.0 * l - 1.0) * l * sb / a;   // d t1 / d beta
                const double t1pp = -(2.0 * l - 1.0) * l * cb / a;
                const bool has2 = std::abs(m) <= l - 2 && std::abs(mp) <= l - 2;
                const double b = has2
                                     ? std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) *
                                                 (static_cast<double>(l - 1) * (l - 1) - static_cast<double>(mp) * mp))
                                     : 0.0;
                const double t2 = l * b / denom;
                const std::size_t i1 = static_cast<std::size_t>(m + l - 1) * w1 + (mp + l - 1);
                const std::size_t i2 =
                    has2 ? static_cast<std::size_t>(m + l - 2) * w2 + (mp + l - 2) : 0;
                const std::size_t at = static_cast<std::size_t>(m + l) * w + (mp + l);
                const double v1 = p1v[i1];
                const double v2 = has2 ? p2v[i2] : 0.0;
                st.value[l][at] = t1 * v1 - t2 * v2;
                if (order >= 1) {
                    const double g1 = p1d[i1];
                    const double g2 = has2 ? p2d[i2] : 0.0;
                    st.d1[l][at] = t1p * v1 + t1 * g1 - t2 * g2;
                    if (order >= 2) {
                        const double h1 = p1h[i1];
                        const double h2 = has2 ? p2h[i2] : 0.0;
                        st.d2[l][at] = t1pp * v1 + 2.0 * t1p * g1 + t1 * h1 - t2 * h2;
                    }
                }
            }
        }
    }
    return st;
}

}  // namespace detail

Eigen::MatrixXd wigner_d_small(int l, double beta) {
    if (l < 0) throw std::invalid_argument("wigner_d_small: l must be >= 0");
    auto st = detail::little_d_stack(l, beta, 0);
    const int w = 2 * l + 1;
    Eigen::MatrixXd d(w, w);
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) d(i, j) = st.value[l][static_cast<std::size_t>(i) * w + j];
    return d;
}

WignerStack wigner_D(int l_max, const Rotation& g) {
    const EulerZyz e = g.euler_zyz();
    auto st = detail::little_d_stack(l_max, e.beta, 0);
    WignerStack out;
    out.l_max = l_max;
    out.blocks.resize(l_max + 1);
    for (int l = 0; l <= l_max; ++l) {
        const int w = 2 * l + 1;
        Eigen::MatrixXcd& blk = out.blocks[l];
        blk.resize(w, w);
        for (int m = -l; m <= l; ++m) {
            const cdouble pa = std::polar(1.0, -m * e.alpha);
            for (int mp = -l; mp <= l; ++mp) {
                const cdouble pg = std::polar(1.0, -mp * e.gamma);
                blk(m + l, mp + l) =
                    pa * st.value[l][static_cast<std::size_t>(m + l) * w + (mp + l)] * pg;
            }
        }
    }
    return out;
}

WignerGradient wigner_D_grad(int l_max, const Rotation& g) {
    const EulerZyz e = g.euler_zyz();
    auto st = detail::little_d_stack(l_max, e.beta, 1);
    WignerGradient out;
    for (auto* s : {&out.d_alpha, &out.d_beta, &out.d_gamma}) {
        s->l_max = l_max;
        s->blocks.resize(l_max + 1);
    }
    for (int l = 0; l <= l_max; ++l) {
        const int w = 2 * l + 1;
        out.d_alpha.blocks[l].resize(w, w);
        out.d_beta.blocks[l].resize(w, w);
        out.d_gamma.blocks[l].resize(w, w);
        for (int m = -l; m <= l; ++m) {
            const cdouble pa = std::polar(1.0, -m * e.alpha);
            for (int mp = -l; mp <= l; ++mp) {
                const cdouble pg = std::polar(1.0, -mp * e.gamma);
                const std::size_t at = static_cast<std::size_t>(m + l) * w + (mp + l);
                const cdouble dd = pa * st.value[l][at] * pg;
                out.d_alpha.blocks[l](m + l, mp + l) = cdouble(0.0, -m) * dd;
                out.d_gamma.blocks[l](m + l, mp + l) = cdouble(0.0, -mp) * dd;
                out.d_beta.blocks[l](m + l, mp + l) = pa * st.d1[l][at] * pg;
            }
        }
    }
    return out;
}

BallExpansion rotate_expansion(const BallExpansion& e, const Rotation& g) {
    const BasisSpec& spec = e.spec();
    const WignerStack stack = wigner_D(spec.l_max(), g);
    BallExpansion out(spec, e.real_volume());
    for (int l = 0; l <= spec.l_max(); ++l) {
        const int n_k = spec.radial_count(l);
        if (n_k == 0) continue;
        const int w = 2 * l + 1;
        using RowMat = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> src(e.block(l), n_k, w);
        Eigen::Map<RowMat> dst(out.block(l), n_k, w);
        // f'_m = sum_{m'} D_{m,m'} f_{m'}  per radial row
        dst = src * stack.blocks[l].transpose();
    }
    return out;
}

}  // namespace ballmatch
