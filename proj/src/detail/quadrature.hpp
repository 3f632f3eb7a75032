#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace ballmatch::detail {

struct GaussLegendre {
    std::vector<double> nodes;    // ascending
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1] (Newton on P_n from the Chebyshev
// initial guess; symmetric pairs share one solve).
inline GaussLegendre gauss_legendre(int n) {
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    return gl;
}

// Rule on [0, 1].
inline GaussLegendre gauss_legendre01(int n) {
    GaussLegendre gl = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
        gl.nodes[i] = 0.5 * (gl.nodes[i] + 1.0);
        gl.weights[i] *= 0.5;
    }
    return gl;
}

// Index into the packed (l, m >= 0) triangle.
inline std::size_t tri_index(int l, int m) {
    return static_cast<std::size_t>(l) * (l + 1) / 2 + m;
}
inline std::size_t tri_count(int l_max) {
    return static_cast<std::size_t>(l_max + 1) * (l_max + 2) / 2;
}

// Fully-normalized associated Legendre values Pbar_l^m(u) for all l <= l_max,
// 0 <= m <= l, with Condon-Shortley phase, so Y_l^m = Pbar_l^m e^{i m phi}.
// `out` has tri_count(l_max) entries indexed by tri_index.
inline void legendre_table(int l_max, double u, double* out) {
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    constexpr double inv_sqrt4pi = 0.28209479177387814;  // 1/sqrt(4 pi)
    out[tri_index(0, 0)] = inv_sqrt4pi;
    for (int m = 1; m <= l_max; ++m)
        out[tri_index(m, m)] =
            -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * out[tri_index(m - 1, m - 1)];
    for (int m = 0; m < l_max; ++m)
        out[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * u * out[tri_index(m, m)];
    for (int m = 0; m <= l_max; ++m) {
        for (int l = m + 2; l <= l_max; ++l) {
            const double a =
                std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
            const double b = std::sqrt(
                (static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                (4.0 * static_cast<double>(l - 1) * (l - 1) - 1.0));
            out[tri_index(l, m)] =
                a * (u * out[tri_index(l - 1, m)] - b * out[tri_index(l - 2, m)]);
        }
    }
}

}  // namespace ballmatch::detail
