#include "ballmatch/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ballmatch/steer.hpp"

namespace ballmatch {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAnchorMargin = 0.05;  // re-anchor well before the 1e-3 hard limit

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct EulerGrid {
    int na = 0, nb = 0, ng = 0;

    static EulerGrid with_step(double step) {
        EulerGrid g;
        g.na = static_cast<int>(std::ceil(2.0 * kPi / step));
        g.ng = g.na;
        g.nb = static_cast<int>(std::ceil(kPi / step)) + 1;
        return g;
    }
    double alpha(int i) const { return 2.0 * kPi * i / na; }
    double beta(int j) const { return nb > 1 ? kPi * j / (nb - 1) : 0.0; }
    double gamma(int k) const { return 2.0 * kPi * k / ng; }
    long size() const { return static_cast<long>(na) * nb * ng; }
    std::size_t at(int i, int j, int k) const {
        return (static_cast<std::size_t>(j) * na + i) * ng + k;
    }
};

// Band-l_cut correlation on the whole grid. Per beta row the degree sum is
// collapsed once, then the alpha/gamma phases are applied as rank-1 sweeps.
std::vector<double> grid_scores(const XiBlocks& xi, int l_cut, const EulerGrid& grid) {
    const int w = 2 * l_cut + 1;
    std::vector<cdouble> ua(static_cast<std::size_t>(grid.na) * w);
    std::vector<cdouble> ug(static_cast<std::size_t>(grid.ng) * w);
    for (int i = 0; i < grid.na; ++i)
        for (int m = -l_cut; m <= l_cut; ++m)
            ua[static_cast<std::size_t>(i) * w + (m + l_cut)] =
                std::polar(1.0, -m * grid.alpha(i));
    for (int k = 0; k < grid.ng; ++k)
        for (int m = -l_cut; m <= l_cut; ++m)
            ug[static_cast<std::size_t>(k) * w + (m + l_cut)] =
                std::polar(1.0, -m * grid.gamma(k));

    std::vector<double> out(grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int j = 0; j < grid.nb; ++j) {
        const auto st = detail::little_d_stack(l_cut, grid.beta(j), 0);
        // A[m][m'] = sum_l xi_l[m,m'] d^l[m,m'](beta_j)
        std::vector<cdouble> a(static_cast<std::size_t>(w) * w, cdouble{0.0, 0.0});
        for (int l = 0; l <= l_cut; ++l) {
            const auto& blk = xi.block(l);
            const int wl = 2 * l + 1;
            for (int m = -l; m <= l; ++m)
                for (int mp = -l; mp <= l; ++mp)
                    a[static_cast<std::size_t>(m + l_cut) * w + (mp + l_cut)] +=
                        blk(m + l, mp + l) *
                        st.value[l][static_cast<std::size_t>(m + l) * wl + (mp + l)];
        }
        std::vector<cdouble> b(w);
        for (int k = 0; k < grid.ng; ++k) {
            const cdouble* pg = ug.data() + static_cast<std::size_t>(k) * w;
            for (int m = 0; m < w; ++m) {
                cdouble acc{0.0, 0.0};
                const cdouble* row = a.data() + static_cast<std::size_t>(m) * w;
                for (int mp = 0; mp < w; ++mp) acc += row[mp] * pg[mp];
                b[m] = acc;
            }
            for (int i = 0; i < grid.na; ++i) {
                const cdouble* pa = ua.data() + static_cast<std::size_t>(i) * w;
                double acc = 0.0;
                for (int m = 0; m < w; ++m)
                    acc += pa[m].real() * b[m].real() - pa[m].imag() * b[m].imag();
                out[grid.at(i, j, k)] = acc;
            }
        }
    }
    return out;
}

// Objective of the rotation search: the plain band-limited correlation, or
// the constrained quotient C(g)/sqrt(1-rho(g)) when a missing wedge makes
// the masked template power rotation-dependent.
struct Objective {
    const XiBlocks* corr = nullptr;
    const XiBlocks* wedge_power = nullptr;

    CorrelationDerivatives eval(const EulerZyz& e, int band, int order) const {
        CorrelationDerivatives c = correlation_derivatives(*corr, e, band, order);
        if (!wedge_power) return c;
        const int nband = std::min(band, wedge_power->l_max());
        const CorrelationDerivatives r = correlation_derivatives(*wedge_power, e, nband, order);
        const double v = std::clamp(1.0 - r.value, 0.02, 2.0);
        const double s = 1.0 / std::sqrt(v);
        CorrelationDerivatives f;
        f.value = c.value * s;
        f.imag = c.imag * s;
        if (order >= 1) {
            const Eigen::Vector3d dv = -r.grad;
            const double v32 = s / v;  // v^{-3/2}
            f.grad = c.grad * s - 0.5 * c.value * v32 * dv;
            if (order >= 2) {
                const Eigen::Matrix3d hv = -r.hess;
                const double v52 = v32 / v;
                f.hess = c.hess * s -
                         0.5 * v32 *
                             (c.grad * dv.transpose() + dv * c.grad.transpose() + c.value * hv) +
                         0.75 * c.value * v52 * dv * dv.transpose();
            }
        }
        return f;
    }
};

struct ShiftOutcome {
    std::array<int, 3> shift{0, 0, 0};
    double norm_score = -std::numeric_limits<double>::infinity();
    double raw_score = 0.0;
    double subtomo_norm = 0.0;
    RefineResult refined;
    long candidates = 0;
    std::map<int, long> evals;
    bool valid = false;
};

bool outcome_better(const ShiftOutcome& a, const ShiftOutcome& b) {
    // deterministic tie-breaking: score, then lexicographic shift, then angle
    if (a.norm_score != b.norm_score) return a.norm_score > b.norm_score;
    if (a.shift != b.shift) return a.shift < b.shift;
    return a.refined.rotation.angle() < b.refined.rotation.angle();
}

}  // namespace

void OptimizerConfig::validate() const {
    if (l_max < 0) throw std::invalid_argument("config: l_max must be >= 0");
    if (!std::is_sorted(band_thresholds.begin(), band_thresholds.end(),
                        std::greater_equal<double>()))
        throw std::invalid_argument("config: band thresholds must be strictly decreasing");
    for (double t : band_thresholds)
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("config: band thresholds must lie in (0,1)");
    if (fixed_bands.empty() && !auto_bands)
        throw std::invalid_argument("config: need fixed bands or auto band selection");
    for (std::size_t i = 0; i < fixed_bands.size(); ++i) {
        if (fixed_bands[i] < 0 || fixed_bands[i] > l_max)
            throw std::invalid_argument("config: bands must lie in [0, l_max]");
        if (i > 0 && fixed_bands[i] <= fixed_bands[i - 1])
            throw std::invalid_argument("config: bands must be strictly increasing");
    }
    if (!(seed_grid_step > 0.0) || seed_grid_step > kPi)
        throw std::invalid_argument("config: seed grid step must be in (0, pi]");
    if (max_candidates < 1 || newton_max_iter < 1)
        throw std::invalid_argument("config: counts must be positive");
    if (!(grad_tol > 0.0) || !(step_damping > 0.0))
        throw std::invalid_argument("config: tolerances must be positive");
    if (shift_radius < 0 || shift_step < 1)
        throw std::invalid_argument("config: bad shift search parameters");
}

std::vector<int> select_bands(const XiBlocks& xi, const std::vector<double>& thresholds) {
    const int l_max = xi.l_max();
    std::vector<double> ratio(l_max + 1);
    for (int l = 0; l <= l_max; ++l) ratio[l] = energy_ratio(xi, l);
    std::vector<int> bands;
    for (double tau : thresholds) {
        for (int l = 0; l <= l_max; ++l) {
            if (ratio[l] <= tau) {
                bands.push_back(l);
                break;
            }
        }
    }
    std::sort(bands.begin(), bands.end());
    bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
    return bands;
}

std::vector<Candidate> seed_candidates(const XiBlocks& xi, int l_low, double grid_step,
                                       int max_candidates, const XiBlocks* wedge_power) {
    if (l_low > xi.l_max()) throw std::invalid_argument("seed_candidates: band exceeds l_max");
    const EulerGrid grid = EulerGrid::with_step(grid_step);
    std::vector<double> scores = grid_scores(xi, l_low, grid);
    if (wedge_power) {
        const std::vector<double> rho =
            grid_scores(*wedge_power, std::min(l_low, wedge_power->l_max()), grid);
        for (std::size_t i = 0; i < scores.size(); ++i)
            scores[i] /= std::sqrt(std::clamp(1.0 - rho[i], 0.02, 2.0));
    }

    std::vector<std::pair<std::size_t, double>> maxima;  // (flat index, score)
    for (int j = 0; j < grid.nb; ++j) {
        for (int i = 0; i < grid.na; ++i) {
            for (int k = 0; k < grid.ng; ++k) {
                const std::size_t self = grid.at(i, j, k);
                const double s = scores[self];
                bool is_max = true;
                for (int dj = -1; dj <= 1 && is_max; ++dj) {
                    const int jj = j + dj;
                    if (jj < 0 || jj >= grid.nb) continue;
                    for (int di = -1; di <= 1 && is_max; ++di) {
                        const int ii = (i + di + grid.na) % grid.na;
                        for (int dk = -1; dk <= 1; ++dk) {
                            const int kk = (k + dk + grid.ng) % grid.ng;
                            const std::size_t other = grid.at(ii, jj, kk);
                            if (other == self) continue;
                            const double t = scores[other];
                            // plateaus keep exactly one representative
                            if (t > s || (t == s && other < self)) {
                                is_max = false;
                                break;
                            }
                        }
                    }
                }
                if (is_max) maxima.emplace_back(self, s);
            }
        }
    }
    std::sort(maxima.begin(), maxima.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(maxima.size()) > max_candidates) maxima.resize(max_candidates);

    std::vector<Candidate> out;
    out.reserve(maxima.size());
    for (const auto& [idx, s] : maxima) {
        const int k = static_cast<int>(idx % grid.ng);
        const int i = static_cast<int>((idx / grid.ng) % grid.na);
        const int j = static_cast<int>(idx / (static_cast<std::size_t>(grid.ng) * grid.na));
        out.push_back({Rotation::from_euler_zyz(grid.alpha(i), grid.beta(j), grid.gamma(k)), s});
    }
    return out;
}

RefineResult refine(const XiBlocks& xi, const Rotation& start, const std::vector<int>& bands,
                    const OptimizerConfig& cfg, const XiBlocks* wedge_power) {
    if (bands.empty()) throw std::invalid_argument("refine: band list is empty");
    static const Rotation kOffset = Rotation::from_euler_zyz(0.0, kPi / 2.0, 0.0);

    RefineResult res;
    Rotation g = start;                 // global iterate
    Rotation anchor;                    // chart: h = g * anchor^-1
    bool anchored = false;
    int anchor_limit = -1;
    Objective obj{&xi, wedge_power};
    std::optional<XiBlocks> owned, owned_wp;  // re-anchored kernels, on demand

    auto reanchor = [&](const Rotation& target, int band) {
        anchor = kOffset.inverse() * target;
        anchor_limit = band;
        owned = xi_compose_right(xi, anchor, band);
        obj.corr = &*owned;
        if (wedge_power) {
            owned_wp = xi_compose_right(*wedge_power, anchor, band);
            obj.wedge_power = &*owned_wp;
        }
        anchored = true;
    };

    bool diverged = false;
    bool band_converged = false;
    double best_score = -std::numeric_limits<double>::infinity();
    Rotation best_g = start;

    for (std::size_t bi = 0; bi < bands.size() && !diverged; ++bi) {
        const int band = bands[bi];
        auto& evals = res.evaluations_per_band[band];
        double lambda = cfg.step_damping;
        band_converged = false;
        if (anchored && band > anchor_limit) reanchor(g, band);  // widen the chart kernel
        for (int iter = 0; iter < cfg.newton_max_iter; ++iter) {
            Rotation h = g * anchor.inverse();
            EulerZyz e = h.euler_zyz();
            if (e.beta < kAnchorMargin || e.beta > kPi - kAnchorMargin) {
                reanchor(g, band);
                h = kOffset;
                e = h.euler_zyz();
            }
            const auto d = obj.eval(e, band, 2);
            ++evals;
            const double scale = std::max(std::abs(d.value), 1e-300);
            const double gnorm = d.grad.norm();
            res.trace.push_back({band, iter, e.alpha, e.beta, e.gamma, d.value, gnorm});
            if (d.value > best_score) {
                best_score = d.value;
                best_g = g;
            }
            if (gnorm <= cfg.grad_tol * scale) {
                band_converged = true;
                break;
            }

            bool accepted = false;
            double lam = lambda;
            for (int retry = 0; retry < 3 && !accepted; ++retry, lam *= 10.0) {
                const Eigen::Matrix3d m = d.hess - lam * Eigen::Matrix3d::Identity();
                Eigen::Vector3d p;
                const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
                if (lu.isInvertible()) {
                    p = -lu.solve(d.grad);
                } else {
                    p = d.grad / lam;  // damped gradient ascent fallback
                }
                const double pn = p.norm();
                if (pn > 1.0) p *= 1.0 / pn;  // trust cap: one radian per step
                const Rotation h_try =
                    Rotation::from_euler_zyz(e.alpha + p.x(), e.beta + p.y(), e.gamma + p.z());
                const auto trial = obj.eval(h_try.euler_zyz(), band, 0);
                ++evals;
                // tolerant acceptance: near the optimum genuine Newton steps
                // improve by less than one ulp of the score
                if (trial.value > d.value - 1e-12 * scale) {
                    g = h_try * anchor;
                    lambda = std::max(lam / 10.0, 1e-12);
                    accepted = true;
                    if (trial.value > best_score) {
                        best_score = trial.value;
                        best_g = g;
                    }
                }
            }
            if (!accepted) {
                diverged = true;  // three consecutive damped retries failed to ascend
                break;
            }
        }
    }

    res.rotation = diverged ? best_g : g;
    const Objective unanchored{&xi, wedge_power};
    res.score = unanchored.eval(res.rotation.euler_zyz(), bands.back(), 0).value;
    ++res.evaluations_per_band[bands.back()];
    // converged = the last band's loop exited through the gradient test,
    // measured in the chart that was optimized
    res.converged = !diverged && band_converged;
    return res;
}

namespace {

ShiftOutcome search_one_shift(const Volume& subtomo, const std::array<int, 3>& s,
                              const BallExpansion& t_hat, double t_norm,
                              const std::vector<int>& bands, const OptimizerConfig& cfg,
                              const XiBlocks* wedge_power) {
    ShiftOutcome oc;
    oc.shift = s;
    const Volume f_s = shift_volume(subtomo, s);
    const BallExpansion f_hat = expand(f_s, t_hat.spec());
    oc.subtomo_norm = f_hat.norm();
    if (!(oc.subtomo_norm > 0.0)) return oc;

    // kernel for C(g) = <f_s, R_g t>: the rotation moves the template, so a
    // wedge filter on the subtomogram stays fixed in its own frame and the
    // arg max is directly the template->particle rotation
    const XiBlocks xi = xi_coefficients(f_hat, t_hat, s);
    auto cands =
        seed_candidates(xi, bands.front(), cfg.seed_grid_step, cfg.max_candidates, wedge_power);
    const EulerGrid grid = EulerGrid::with_step(cfg.seed_grid_step);
    oc.evals[bands.front()] += grid.size();
    if (cands.empty()) return oc;

    auto run = [&](const Rotation& start, const std::vector<int>& schedule) {
        RefineResult r = refine(xi, start, schedule, cfg, wedge_power);
        for (const auto& [band, n] : r.evaluations_per_band) oc.evals[band] += n;
        ++oc.candidates;
        return r;
    };

    RefineResult best;
    bool have = false;
    if (cfg.prune_after_band && bands.size() > 1) {
        // refine everyone at the lowest band, keep the winner for the rest
        RefineResult low_best;
        bool low_have = false;
        for (const auto& c : cands) {
            RefineResult r = run(c.rotation, {bands.front()});
            if (!low_have || r.score > low_best.score) {
                low_best = std::move(r);
                low_have = true;
            }
        }
        best = run(low_best.rotation, std::vector<int>(bands.begin() + 1, bands.end()));
        have = true;
    } else {
        for (const auto& c : cands) {
            RefineResult r = run(c.rotation, bands);
            if (!have || r.score > best.score ||
                (r.score == best.score && r.rotation.angle() < best.rotation.angle())) {
                best = std::move(r);
                have = true;
            }
        }
    }
    oc.refined = std::move(best);
    oc.raw_score = oc.refined.score;
    oc.norm_score = oc.raw_score / (t_norm * oc.subtomo_norm);
    oc.valid = true;
    return oc;
}

}  // namespace

AlignmentResult align(const Volume& tmpl, const Volume& subtomo, const OptimizerConfig& cfg,
                      const std::optional<WedgeMask>& wedge) {
    cfg.validate();
    if (tmpl.n != subtomo.n)
        throw std::invalid_argument("align: template and subtomogram grids differ");
    if (!(volume_l2_norm(tmpl) > 0.0) || !(volume_l2_norm(subtomo) > 0.0))
        throw std::invalid_argument("align: zero-energy input volume");

    const auto t0 = Clock::now();
    AlignmentResult out;

#ifdef _OPENMP
    const int n_threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#endif

    const double cut =
        cfg.lambda_cut > 0.0 ? cfg.lambda_cut : default_lambda_cut(tmpl.n, cfg.l_max);
    const BasisSpec spec = build_spec(cfg.l_max, cut);

    // missing-wedge compensation: restrict the data to its measured region
    // with a tapered edge; the mask lives in the subtomogram frame and must
    // not rotate with g
    const Volume f_w = wedge ? apply_wedge_taper(subtomo, *wedge) : subtomo;
    const BallExpansion t_hat = expand(tmpl, spec);
    out.template_norm = t_hat.norm();
    if (!(out.template_norm > 0.0))
        throw std::invalid_argument("align: template has no in-ball energy");
    // rotation-dependent masked template power, for the constrained score
    std::optional<XiBlocks> wp;
    if (wedge && wedge->theta_max_deg() < 90.0)
        wp = wedge_power_kernel(tmpl, *wedge, cfg.l_max);
    const XiBlocks* wp_ptr = wp ? &*wp : nullptr;
    out.expand_template_s = seconds_since(t0);

    // band schedule (auto mode reads the zero-shift kernel)
    std::vector<int> bands = cfg.fixed_bands;
    if (cfg.auto_bands) {
        const BallExpansion f0 = expand(f_w, spec);
        bands = select_bands(xi_coefficients(f0, t_hat, {0, 0, 0}), cfg.band_thresholds);
    }
    out.bands = bands;

    auto run_stage = [&](const std::vector<std::array<int, 3>>& shifts) {
        std::vector<ShiftOutcome> res(shifts.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
#endif
        for (std::size_t i = 0; i < shifts.size(); ++i)
            res[i] = search_one_shift(f_w, shifts[i], t_hat, out.template_norm, bands, cfg,
                                      wp_ptr);
        return res;
    };

    std::vector<std::array<int, 3>> coarse;
    for (int z = -cfg.shift_radius; z <= cfg.shift_radius; z += cfg.shift_step)
        for (int y = -cfg.shift_radius; y <= cfg.shift_radius; y += cfg.shift_step)
            for (int x = -cfg.shift_radius; x <= cfg.shift_radius; x += cfg.shift_step)
                coarse.push_back({x, y, z});

    const auto t_coarse = Clock::now();
    std::vector<ShiftOutcome> outcomes = run_stage(coarse);
    const ShiftOutcome* best = nullptr;
    for (const auto& oc : outcomes)
        if (oc.valid && (!best || outcome_better(oc, *best))) best = &oc;
    if (!best) throw std::invalid_argument("align: no usable shift window (empty subtomogram)");
    out.coarse_search_s = seconds_since(t_coarse);

    // fine pass: unit-step cube around the coarse winner, skipping repeats
    const auto t_fine = Clock::now();
    std::vector<std::array<int, 3>> fine;
    for (int z = -cfg.shift_step; z <= cfg.shift_step; ++z)
        for (int y = -cfg.shift_step; y <= cfg.shift_step; ++y)
            for (int x = -cfg.shift_step; x <= cfg.shift_step; ++x) {
                const std::array<int, 3> s{best->shift[0] + x, best->shift[1] + y,
                                           best->shift[2] + z};
                const bool seen =
                    std::any_of(coarse.begin(), coarse.end(), [&](const auto& c) { return c == s; });
                if (!seen) fine.push_back(s);
            }
    std::vector<ShiftOutcome> fine_outcomes = run_stage(fine);
    for (const auto& oc : fine_outcomes)
        if (oc.valid && outcome_better(oc, *best)) best = &oc;
    out.fine_search_s = seconds_since(t_fine);

    for (const auto* set : {&outcomes, &fine_outcomes})
        for (const auto& oc : *set) {
            out.candidates_evaluated += oc.candidates;
            for (const auto& [band, n] : oc.evals) out.evaluations_per_band[band] += n;
        }

    out.shift = best->shift;
    out.rotation = best->refined.rotation;  // template->particle by construction
    out.score = best->norm_score;
    out.converged = best->refined.converged;
    out.subtomo_norm = best->subtomo_norm;
    out.trace = best->refined.trace;
    out.wall_time_s = seconds_since(t0);
    return out;
}

BaselineResult exhaustive_baseline(const XiBlocks& xi, int l_cut, double angular_step) {
    if (!(angular_step > 0.0)) throw std::invalid_argument("baseline: step must be positive");
    const EulerGrid grid = EulerGrid::with_step(angular_step);
    const std::vector<double> scores = grid_scores(xi, l_cut, grid);
    std::size_t best = 0;
    for (std::size_t idx = 1; idx < scores.size(); ++idx)
        if (scores[idx] > scores[best]) best = idx;
    const int k = static_cast<int>(best % grid.ng);
    const int i = static_cast<int>((best / grid.ng) % grid.na);
    const int j = static_cast<int>(best / (static_cast<std::size_t>(grid.ng) * grid.na));
    BaselineResult res;
    res.rotation = Rotation::from_euler_zyz(grid.alpha(i), grid.beta(j), grid.gamma(k));
    res.score = scores[best];
    res.evaluations = grid.size();
    return res;
}

long baseline_evaluation_count(double angular_step) {
    const EulerGrid grid = EulerGrid::with_step(angular_step);
    return grid.size();
}

BenchReport run_bench(const Volume& tmpl, const Volume& subtomo, const OptimizerConfig& cfg,
                      const std::optional<WedgeMask>& wedge,
                      const std::optional<Rotation>& true_rotation,
                      const std::optional<std::array<int, 3>>& true_shift,
                      double baseline_step_deg, int baseline_band) {
    BenchReport rep;
    rep.baseline_step_deg = baseline_step_deg;
    rep.baseline_band = baseline_band;

    auto t0 = Clock::now();
    rep.alignment = align(tmpl, subtomo, cfg, wedge);
    rep.align_seconds = seconds_since(t0);
    for (const auto& [band, n] : rep.alignment.evaluations_per_band) rep.align_evaluations += n;

    // rebuild the winning shift's kernel for the baseline sweep
    const double cut =
        cfg.lambda_cut > 0.0 ? cfg.lambda_cut : default_lambda_cut(tmpl.n, cfg.l_max);
    const BasisSpec spec = build_spec(cfg.l_max, cut);
    const Volume f_w = wedge ? apply_wedge_taper(subtomo, *wedge) : subtomo;
    const BallExpansion t_hat = expand(tmpl, spec);
    const BallExpansion f_hat = expand(shift_volume(f_w, rep.alignment.shift), spec);
    const XiBlocks xi = xi_coefficients(f_hat, t_hat, rep.alignment.shift);

    t0 = Clock::now();
    rep.baseline = exhaustive_baseline(xi, baseline_band, baseline_step_deg * kPi / 180.0);
    rep.baseline_seconds = seconds_since(t0);

    if (true_rotation) {
        rep.align_error_deg = geodesic_degrees(rep.alignment.rotation, *true_rotation);
        rep.baseline_error_deg = geodesic_degrees(rep.baseline.rotation, *true_rotation);
        rep.matched_step_deg = std::max(rep.align_error_deg, 0.01);
    } else {
        rep.matched_step_deg = baseline_step_deg;
    }
    (void)true_shift;
    rep.matched_evaluations = baseline_evaluation_count(rep.matched_step_deg * kPi / 180.0);
    rep.evaluation_ratio =
        static_cast<double>(rep.align_evaluations) / static_cast<double>(rep.matched_evaluations);
    return rep;
}

}  // namespace ballmatch
