#include "detail/bessel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ballmatch::detail {

namespace {

constexpr double kPi = std::numbers::pi;

double jl_small_x(int l, double x) {
    // Leading terms of the series x^l / (2l+1)!! * (1 - x^2/(2(2l+3)) + ...).
    double v = 1.0;
    for (int i = 1; i <= l; ++i) v *= x / (2 * i + 1);
    return v * (1.0 - x * x / (2.0 * (2 * l + 3)));
}

// Downward (Miller) recurrence, stable for l >= x.
double jl_downward(int l, double x) {
    const int start = l + 20 + static_cast<int>(std::sqrt(40.0 * l + 100.0));
    double jp = 0.0;     // j_{n+1}, arbitrary scale
    double jn = 1e-290;  // j_n
    double jl_val = 0.0;
    for (int n = start; n >= 1; --n) {
        const double jm = (2.0 * n + 1.0) / x * jn - jp;
        jp = jn;
        jn = jm;
        if (n - 1 == l) jl_val = jn;
        if (std::abs(jn) > 1e270) {
            jn *= 1e-290;
            jp *= 1e-290;
            jl_val *= 1e-290;
        }
    }
    return jl_val * ((std::sin(x) / x) / jn);
}

// McMahon asymptotic estimate for the k-th zero of j_l (zero of J_{l+1/2}).
double mcmahon_zero(int l, int k) {
    const double nu = l + 0.5;
    const double mu = 4.0 * nu * nu;
    const double b = (k + 0.5 * nu - 0.25) * kPi;
    const double b8 = 8.0 * b;
    return b - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8 * b8 * b8);
}

// Safeguarded Newton inside a guaranteed sign-change bracket (lo, hi),
// seeded by the McMahon estimate when it falls inside.
double refine_root(int l, double lo, double hi, double seed) {
    double flo = sph_jl(l, lo);
    double x = (seed > lo && seed < hi) ? seed : 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = sph_jl(l, x);
        if ((f > 0) == (flo > 0)) {
            lo = x;
            flo = f;
        } else {
            hi = x;
        }
        if (std::abs(f) < 1e-14 && (hi - lo) < 1e-12 * x) return x;
        const double fp = sph_jl_prime(l, x);
        double next = (fp != 0.0) ? x - f / fp : 0.5 * (lo + hi);
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (next == x) return x;
        x = next;
    }
    return x;
}

}  // namespace

double sph_jl(int l, double x) {
    if (x < 0.0) return (l % 2 ? -1.0 : 1.0) * sph_jl(l, -x);
    if (x < 1e-6) return l == 0 ? 1.0 - x * x / 6.0 : jl_small_x(l, x);
    if (l == 0) return std::sin(x) / x;
    const double j0 = std::sin(x) / x;
    const double j1 = j0 / x - std::cos(x) / x;
    if (l == 1) return j1;
    if (x > l + 0.5) {  // upward recurrence is stable here
        double jm = j0, jn = j1;
        for (int n = 1; n < l; ++n) {
            const double jp = (2.0 * n + 1.0) / x * jn - jm;
            jm = jn;
            jn = jp;
        }
        return jn;
    }
    return jl_downward(l, x);
}

void sph_jl_array(int l_max, double x, double* out) {
    if (x < 0.0) {
        sph_jl_array(l_max, -x, out);
        for (int l = 1; l <= l_max; l += 2) out[l] = -out[l];
        return;
    }
    if (x < 1e-6) {
        for (int l = 0; l <= l_max; ++l)
            out[l] = l == 0 ? 1.0 - x * x / 6.0 : jl_small_x(l, x);
        return;
    }
    out[0] = std::sin(x) / x;
    if (l_max == 0) return;
    out[1] = out[0] / x - std::cos(x) / x;
    if (l_max == 1) return;
    if (x > l_max + 0.5) {
        for (int n = 1; n < l_max; ++n)
            out[n + 1] = (2.0 * n + 1.0) / x * out[n] - out[n - 1];
        return;
    }
    const int start = l_max + 20 + static_cast<int>(std::sqrt(40.0 * l_max + 100.0));
    std::vector<double> buf(start + 2, 0.0);
    buf[start] = 1e-290;
    for (int n = start; n >= 1; --n) {
        buf[n - 1] = (2.0 * n + 1.0) / x * buf[n] - buf[n + 1];
        if (std::abs(buf[n - 1]) > 1e270) {
            for (int i = n - 1; i <= start + 1; ++i) buf[i] *= 1e-290;
        }
    }
    const double scale = out[0] / buf[0];
    for (int l = 1; l <= l_max; ++l) out[l] = buf[l] * scale;
}

double sph_jl_prime(int l, double x) {
    if (l == 0) return -sph_jl(1, x);
    if (x < 1e-12) return l == 1 ? 1.0 / 3.0 : 0.0;
    return sph_jl(l - 1, x) - (l + 1.0) / x * sph_jl(l, x);
}

double bessel_root(int l, int k) {
    if (l < 0) throw std::invalid_argument("bessel_root: degree l must be >= 0");
    if (k < 1) throw std::invalid_argument("bessel_root: root index k must be >= 1");
    if (l == 0) return k * kPi;  // j_0 = sin(x)/x
    // March rows upward; row ll needs one more root than row ll+1 for its
    // interlacing brackets, so start row 0 with k+l roots.
    std::vector<double> prev(static_cast<std::size_t>(k + l));
    for (int i = 1; i <= k + l; ++i) prev[i - 1] = i * kPi;
    for (int ll = 1; ll <= l; ++ll) {
        const int count = k + (l - ll);
        std::vector<double> cur(count);
        for (int i = 0; i < count; ++i)
            cur[i] = refine_root(ll, prev[i], prev[i + 1], mcmahon_zero(ll, i + 1));
        prev = std::move(cur);
    }
    return prev[k - 1];
}

std::vector<std::vector<double>> bessel_root_table(int l_max, double lambda_cut) {
    // Row l keeps a margin of (l_max + 2 - l) roots beyond the cutoff; the
    // margin shrinks by at most one per level, which keeps every next row
    // fully bracketed without re-extending parents.
    std::vector<std::vector<double>> rows(l_max + 1);
    std::vector<double> prev;
    {
        int beyond = 0;
        for (int k = 1; beyond < l_max + 2; ++k) {
            prev.push_back(k * kPi);
            if (prev.back() > lambda_cut) ++beyond;
        }
    }
    rows[0] = prev;
    for (int l = 1; l <= l_max; ++l) {
        std::vector<double> cur;
        int beyond = 0;
        for (std::size_t i = 0; i + 1 < prev.size() && beyond < l_max + 2 - l; ++i) {
            cur.push_back(refine_root(l, prev[i], prev[i + 1],
                                      mcmahon_zero(l, static_cast<int>(i) + 1)));
            if (cur.back() > lambda_cut) ++beyond;
        }
        rows[l] = cur;
        prev = std::move(cur);
    }
    for (auto& row : rows)
        while (!row.empty() && row.back() > lambda_cut) row.pop_back();
    return rows;
}

}  // namespace ballmatch::detail
