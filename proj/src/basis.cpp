#include "ballmatch/basis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "detail/bessel.hpp"
#include "detail/fftw_util.hpp"
#include "detail/quadrature.hpp"

namespace ballmatch {

namespace {

constexpr double kPi = std::numbers::pi;

// Spherical product-quadrature tables shared by every expand() on a spec.
// Node positions depend only on (l_max, lambda_cut), not on the grid size.
struct ExpandPlan {
    int n_r = 0, n_theta = 0, n_phi = 0;
    std::vector<double> r;          // radial nodes in (0,1)
    std::vector<double> sin_theta;  // per theta node
    std::vector<double> cos_theta;
    std::vector<double> ptab;       // [(m,l) row][theta]: Pbar * w_u
    std::vector<double> radial;     // [pair row][r]: c j_l(lambda r) * r^2 w_r * 2pi/n_phi
};

// Fine radial interpolation table for synthesize(): one row per (l,k) with
// a ghost node at r = -h (Bessel parity) for the cubic stencil.
struct SynthTable {
    int n_fine = 0;
    std::vector<double> rows;  // [pair][n_fine + 3]
    std::size_t row_len = 0;
};

std::size_t ml_row(int l_max, int m, int l) {
    // rows grouped by m, then l = m..l_max
    return static_cast<std::size_t>(m) * (l_max + 1) - static_cast<std::size_t>(m) * (m - 1) / 2 +
           (l - m);
}

}  // namespace

struct BasisSpec::Impl {
    int l_max = 0;
    double lambda_cut = 0.0;
    std::vector<std::vector<double>> roots;  // [l][k-1]
    std::vector<std::vector<double>> norms;
    std::vector<std::size_t> block_off;  // coefficient offset per degree
    std::vector<std::size_t> pair_off;   // (l,k) pair offset per degree
    std::size_t coeff_total = 0;
    std::size_t pair_total = 0;

    mutable std::once_flag expand_once, synth_once;
    mutable std::shared_ptr<const ExpandPlan> expand_plan;
    mutable std::shared_ptr<const SynthTable> synth_table;

    const ExpandPlan& get_expand_plan() const;
    const SynthTable& get_synth_table() const;
};

double bessel_zero(int l, int k) { return detail::bessel_root(l, k); }

double radial_norm(int l, int k) {
    // From j_l(lambda) = 0: integral of j_l(lambda r)^2 r^2 dr = j_{l+1}(lambda)^2 / 2.
    const double lambda = detail::bessel_root(l, k);
    return std::sqrt(2.0) / std::abs(detail::sph_jl(l + 1, lambda));
}

cdouble spherical_harmonic(int l, int m, double theta, double phi) {
    if (l < 0 || std::abs(m) > l)
        throw std::invalid_argument("spherical_harmonic: require |m| <= l");
    const int ma = std::abs(m);
    std::vector<double> tab(detail::tri_count(l));
    detail::legendre_table(l, std::cos(theta), tab.data());
    const double p = tab[detail::tri_index(l, ma)];
    const cdouble y = p * std::polar(1.0, ma * phi);
    if (m >= 0) return y;
    return (ma % 2 ? -1.0 : 1.0) * std::conj(y);
}

BasisSpec build_spec(int l_max, double lambda_cut) {
    if (l_max < 0) throw std::invalid_argument("build_spec: l_max must be >= 0");
    if (!(lambda_cut >= kPi))
        throw std::invalid_argument("build_spec: lambda_cut must retain the (l=0,k=1) root pi");
    auto impl = std::make_shared<BasisSpec::Impl>();
    impl->l_max = l_max;
    impl->lambda_cut = lambda_cut;
    impl->roots = detail::bessel_root_table(l_max, lambda_cut);
    impl->norms.resize(l_max + 1);
    impl->block_off.resize(l_max + 1);
    impl->pair_off.resize(l_max + 1);
    std::size_t coeffs = 0, pairs = 0;
    for (int l = 0; l <= l_max; ++l) {
        impl->block_off[l] = coeffs;
        impl->pair_off[l] = pairs;
        auto& nr = impl->norms[l];
        nr.resize(impl->roots[l].size());
        for (std::size_t i = 0; i < nr.size(); ++i)
            nr[i] = std::sqrt(2.0) / std::abs(detail::sph_jl(l + 1, impl->roots[l][i]));
        coeffs += impl->roots[l].size() * (2 * l + 1);
        pairs += impl->roots[l].size();
    }
    impl->coeff_total = coeffs;
    impl->pair_total = pairs;
    BasisSpec spec;
    spec.m_impl = std::move(impl);
    return spec;
}

double default_lambda_cut(int n, int l_max) {
    const double nyquist = kPi * n / 2.0;
    auto rows = detail::bessel_root_table(l_max, nyquist);
    const std::size_t cap = static_cast<std::size_t>(n) * n * n / 4;
    std::size_t count = 0;
    std::vector<std::pair<double, std::size_t>> weighted;
    for (int l = 0; l < static_cast<int>(rows.size()); ++l)
        for (double r : rows[l]) {
            weighted.emplace_back(r, 2 * l + 1);
            count += 2 * l + 1;
        }
    if (count <= cap) return nyquist;
    std::sort(weighted.begin(), weighted.end());
    std::size_t acc = 0;
    double cut = kPi;
    for (const auto& [root, w] : weighted) {
        if (acc + w > cap) break;
        acc += w;
        cut = root;
    }
    return cut;
}

int BasisSpec::l_max() const { return m_impl->l_max; }
double BasisSpec::lambda_cut() const { return m_impl->lambda_cut; }
int BasisSpec::radial_count(int l) const { return static_cast<int>(m_impl->roots[l].size()); }
double BasisSpec::root(int l, int k) const { return m_impl->roots[l][k - 1]; }
double BasisSpec::norm(int l, int k) const { return m_impl->norms[l][k - 1]; }
std::size_t BasisSpec::coeff_count() const { return m_impl->coeff_total; }
std::size_t BasisSpec::pair_count() const { return m_impl->pair_total; }
std::size_t BasisSpec::block_offset(int l) const { return m_impl->block_off[l]; }

std::size_t BasisSpec::index_of(const BasisIndex& idx) const {
    return m_impl->block_off[idx.l] +
           static_cast<std::size_t>(idx.k - 1) * (2 * idx.l + 1) + (idx.m + idx.l);
}

bool BasisSpec::compatible(const BasisSpec& other) const {
    if (m_impl == other.m_impl) return true;
    if (!m_impl || !other.m_impl) return false;
    return m_impl->l_max == other.m_impl->l_max &&
           m_impl->lambda_cut == other.m_impl->lambda_cut &&
           m_impl->coeff_total == other.m_impl->coeff_total;
}

BallExpansion::BallExpansion(BasisSpec spec, bool real_volume)
    : m_spec(std::move(spec)), m_coeffs(m_spec.coeff_count(), cdouble{0.0, 0.0}),
      m_real(real_volume) {}

double BallExpansion::energy() const {
    double e = 0.0;
    for (const auto& c : m_coeffs) e += std::norm(c);
    return e;
}

double BallExpansion::norm() const { return std::sqrt(energy()); }

const ExpandPlan& BasisSpec::Impl::get_expand_plan() const {
    std::call_once(expand_once, [this] {
        auto plan = std::make_shared<ExpandPlan>();
        plan->n_theta = 2 * l_max + 2;
        plan->n_phi = 2 * l_max + 2;
        // The radial integrand oscillates with total phase up to 2*lambda_cut;
        // l_max+1 nodes are not enough at the Nyquist cutoff.
        plan->n_r = std::max(l_max + 1, static_cast<int>(std::ceil(0.55 * lambda_cut)) + 8);

        const auto gr = detail::gauss_legendre01(plan->n_r);
        const auto gu = detail::gauss_legendre(plan->n_theta);
        plan->r = gr.nodes;
        plan->cos_theta = gu.nodes;
        plan->sin_theta.resize(plan->n_theta);
        for (int t = 0; t < plan->n_theta; ++t)
            plan->sin_theta[t] = std::sqrt(std::max(0.0, 1.0 - gu.nodes[t] * gu.nodes[t]));

        // Pbar * w_u rows, grouped by (m, l)
        const std::size_t n_rows = detail::tri_count(l_max);
        plan->ptab.assign(n_rows * plan->n_theta, 0.0);
        std::vector<double> tab(detail::tri_count(l_max));
        for (int t = 0; t < plan->n_theta; ++t) {
            detail::legendre_table(l_max, gu.nodes[t], tab.data());
            for (int m = 0; m <= l_max; ++m)
                for (int l = m; l <= l_max; ++l)
                    plan->ptab[ml_row(l_max, m, l) * plan->n_theta + t] =
                        tab[detail::tri_index(l, m)] * gu.weights[t];
        }

        // radial rows: c_{lk} j_l(lambda r) * r^2 * w_r * (2 pi / n_phi)
        plan->radial.assign(pair_total * plan->n_r, 0.0);
        const double wphi = 2.0 * kPi / plan->n_phi;
        for (int l = 0; l <= l_max; ++l) {
            for (std::size_t ki = 0; ki < roots[l].size(); ++ki) {
                double* row = plan->radial.data() + (pair_off[l] + ki) * plan->n_r;
                for (int i = 0; i < plan->n_r; ++i) {
                    const double rr = gr.nodes[i];
                    row[i] = norms[l][ki] * detail::sph_jl(l, roots[l][ki] * rr) * rr * rr *
                             gr.weights[i] * wphi;
                }
            }
        }
        expand_plan = std::move(plan);
    });
    return *expand_plan;
}

const SynthTable& BasisSpec::Impl::get_synth_table() const {
    std::call_once(synth_once, [this] {
        auto table = std::make_shared<SynthTable>();
        table->n_fine = 2048;
        table->row_len = table->n_fine + 3;
        table->rows.assign(pair_total * table->row_len, 0.0);
        const double h = 1.0 / table->n_fine;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int l = 0; l <= l_max; ++l) {
            for (std::size_t ki = 0; ki < roots[l].size(); ++ki) {
                double* row = table->rows.data() + (pair_off[l] + ki) * table->row_len;
                const double lc = roots[l][ki];
                const double c = norms[l][ki];
                // row[j] holds the value at node j-1 (ghost at -h via parity)
                for (int j = 1; j < static_cast<int>(table->row_len); ++j)
                    row[j] = c * detail::sph_jl(l, lc * (j - 1) * h);
                row[0] = (l % 2 ? -1.0 : 1.0) * row[2];
            }
        }
        synth_table = std::move(table);
    });
    return *synth_table;
}

BallExpansion expand(const Volume& v, const BasisSpec& spec) {
    if (!spec.valid()) throw std::invalid_argument("expand: invalid basis spec");
    const auto& impl = spec.impl();
    const auto& plan = impl.get_expand_plan();
    const int l_max = impl.l_max;
    const int n_r = plan.n_r, n_theta = plan.n_theta, n_phi = plan.n_phi;

    // 1. resample onto the spherical product grid
    std::vector<double> samples(static_cast<std::size_t>(n_r) * n_theta * n_phi);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n_r; ++i) {
        for (int t = 0; t < n_theta; ++t) {
            const double rs = plan.r[i] * plan.sin_theta[t];
            const double z = plan.r[i] * plan.cos_theta[t];
            double* dst = samples.data() + (static_cast<std::size_t>(i) * n_theta + t) * n_phi;
            for (int p = 0; p < n_phi; ++p) {
                const double phi = 2.0 * kPi * p / n_phi;
                dst[p] = sample_trilinear(v, rs * std::cos(phi), rs * std::sin(phi), z);
            }
        }
    }

    // 2. DFT along phi; bin m holds sum_p f e^{-i m phi_p}
    const int n_bins = n_phi / 2 + 1;
    std::vector<cdouble> g(static_cast<std::size_t>(n_r) * n_theta * n_bins);
    detail::dft_r2c_rows(n_phi, n_r * n_theta, samples.data(), g.data());

    // transpose to [m][i][t] for the theta contraction
    std::vector<cdouble> gt(static_cast<std::size_t>(l_max + 1) * n_r * n_theta);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int m = 0; m <= l_max; ++m)
        for (int i = 0; i < n_r; ++i)
            for (int t = 0; t < n_theta; ++t)
                gt[(static_cast<std::size_t>(m) * n_r + i) * n_theta + t] =
                    g[(static_cast<std::size_t>(i) * n_theta + t) * n_bins + m];

    // 3. theta contraction: H[(m,l)][i] = sum_t gt[m][i][t] * Pbar*w_u
    const std::size_t n_rows = detail::tri_count(l_max);
    std::vector<cdouble> h(n_rows * n_r);
    std::vector<std::pair<int, int>> ml_pairs;
    ml_pairs.reserve(n_rows);
    for (int m = 0; m <= l_max; ++m)
        for (int l = m; l <= l_max; ++l) ml_pairs.emplace_back(m, l);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t idx = 0; idx < ml_pairs.size(); ++idx) {
        const auto [m, l] = ml_pairs[idx];
        const std::size_t row = ml_row(l_max, m, l);
        const double* p = plan.ptab.data() + row * n_theta;
        for (int i = 0; i < n_r; ++i) {
            const cdouble* src = gt.data() + (static_cast<std::size_t>(m) * n_r + i) * n_theta;
            cdouble acc{0.0, 0.0};
            for (int t = 0; t < n_theta; ++t) acc += src[t] * p[t];
            h[row * n_r + i] = acc;
        }
    }

    // 4. radial contraction + negative-m fill (real input: conjugate symmetry)
    BallExpansion out(spec, true);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int l = 0; l <= l_max; ++l) {
        const int n_k = static_cast<int>(impl.roots[l].size());
        cdouble* block = out.block(l);
        for (int k = 1; k <= n_k; ++k) {
            const double* rw = plan.radial.data() + (impl.pair_off[l] + k - 1) * plan.n_r;
            cdouble* row = block + static_cast<std::size_t>(k - 1) * (2 * l + 1) + l;  // m = 0
            for (int m = 0; m <= l; ++m) {
                const cdouble* hs = h.data() + ml_row(l_max, m, l) * n_r;
                cdouble acc{0.0, 0.0};
                for (int i = 0; i < n_r; ++i) acc += hs[i] * rw[i];
                row[m] = acc;
                if (m > 0) row[-m] = (m % 2 ? -1.0 : 1.0) * std::conj(acc);
            }
        }
    }
    return out;
}

Volume synthesize(const BallExpansion& e, int n, double voxel_size) {
    if (n < 8) throw std::invalid_argument("synthesize: grid size must be >= 8");
    const auto& spec = e.spec();
    const auto& impl = spec.impl();
    const auto& table = impl.get_synth_table();
    const int l_max = impl.l_max;
    const int n_fine = table.n_fine;
    Volume out(n, voxel_size);

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<double> ptab(detail::tri_count(l_max));
        std::vector<cdouble> phase(l_max + 1);
        std::vector<cdouble> bm(l_max + 1);
        std::vector<cdouble> bneg(l_max + 1);
#ifdef _OPENMP
#pragma omp for schedule(dynamic)
#endif
        for (int zi = 0; zi < n; ++zi) {
            const double z = out.coord(zi);
            for (int yi = 0; yi < n; ++yi) {
                const double y = out.coord(yi);
                for (int xi = 0; xi < n; ++xi) {
                    const double x = out.coord(xi);
                    const double r2 = x * x + y * y + z * z;
                    if (r2 >= 1.0) continue;  // outside the unit ball
                    const double r = std::sqrt(r2);
                    const double u = r > 1e-14 ? z / r : 1.0;
                    const double phi = std::atan2(y, x);
                    detail::legendre_table(l_max, u, ptab.data());
                    phase[0] = {1.0, 0.0};
                    const cdouble e1 = std::polar(1.0, phi);
                    for (int m = 1; m <= l_max; ++m) phase[m] = phase[m - 1] * e1;

                    // Catmull-Rom weights on the fine radial grid
                    const double tpos = r * n_fine;
                    const int i0 = std::min(static_cast<int>(tpos), n_fine - 1);
                    const double f = tpos - i0;
                    const double wm1 = ((-0.5 * f + 1.0) * f - 0.5) * f;
                    const double w0 = (1.5 * f - 2.5) * f * f + 1.0;
                    const double w1 = ((-1.5 * f + 2.0) * f + 0.5) * f;
                    const double w2 = (0.5 * f - 0.5) * f * f;

                    double acc = 0.0;
                    cdouble acc_c{0.0, 0.0};
                    for (int l = 0; l <= l_max; ++l) {
                        const int n_k = static_cast<int>(impl.roots[l].size());
                        if (n_k == 0) continue;
                        std::fill(bm.begin(), bm.begin() + l + 1, cdouble{0.0, 0.0});
                        if (!e.real_volume())
                            std::fill(bneg.begin(), bneg.begin() + l + 1, cdouble{0.0, 0.0});
                        const cdouble* block = e.block(l);
                        for (int k = 0; k < n_k; ++k) {
                            const double* row =
                                table.rows.data() + (impl.pair_off[l] + k) * table.row_len + i0;
                            const double rv = wm1 * row[0] + w0 * row[1] + w1 * row[2] + w2 * row[3];
                            const cdouble* c = block + static_cast<std::size_t>(k) * (2 * l + 1) + l;
                            for (int m = 0; m <= l; ++m) bm[m] += rv * c[m];
                            if (!e.real_volume())
                                for (int m = 1; m <= l; ++m) bneg[m] += rv * c[-m];
                        }
                        if (e.real_volume()) {
                            // f_hat(k,l,-m) = (-1)^m conj(f_hat(k,l,m)) pairs with
                            // Y_{l,-m} = (-1)^m conj(Y_{l,m}): twice the real part.
                            acc += ptab[detail::tri_index(l, 0)] * bm[0].real();
                            for (int m = 1; m <= l; ++m) {
                                const double pp = ptab[detail::tri_index(l, m)];
                                acc += 2.0 * pp *
                                       (bm[m].real() * phase[m].real() -
                                        bm[m].imag() * phase[m].imag());
                            }
                        } else {
                            for (int m = 0; m <= l; ++m)
                                acc_c += bm[m] * ptab[detail::tri_index(l, m)] * phase[m];
                            for (int m = 1; m <= l; ++m)
                                acc_c += bneg[m] * (m % 2 ? -1.0 : 1.0) *
                                         std::conj(ptab[detail::tri_index(l, m)] * phase[m]);
                        }
                    }
                    out.at(xi, yi, zi) = e.real_volume() ? acc : acc_c.real();
                }
            }
        }
    }
    return out;
}

BallExpansion lowpass(const BallExpansion& e, int l_cut) {
    if (l_cut < 0 || l_cut > e.spec().l_max())
        throw std::invalid_argument("lowpass: l_cut out of range");
    BallExpansion out = e;
    for (int l = l_cut + 1; l <= e.spec().l_max(); ++l) {
        cdouble* block = out.block(l);
        const std::size_t count =
            static_cast<std::size_t>(e.spec().radial_count(l)) * (2 * l + 1);
        std::fill(block, block + count, cdouble{0.0, 0.0});
    }
    return out;
}

}  // namespace ballmatch
