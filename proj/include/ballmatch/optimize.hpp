#pragma once

#include <array>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "ballmatch/rotation.hpp"
#include "ballmatch/volume.hpp"
#include "ballmatch/xcorr.hpp"

namespace ballmatch {

struct OptimizerConfig {
    int l_max = 42;
    double lambda_cut = 0.0;                       // 0 = default for the grid size
    std::vector<double> band_thresholds{0.5, 0.25, 0.05};
    std::vector<int> fixed_bands{7, 12, 33};
    bool auto_bands = false;                       // select bands by energy ratio instead
    double seed_grid_step = std::numbers::pi / 8;  // Euler grid step at the lowest band
    int max_candidates = 20;
    int newton_max_iter = 30;
    double grad_tol = 1e-7;                        // relative to the current score
    double step_damping = 1e-3;                    // initial Levenberg parameter
    int shift_radius = 4;                          // voxels
    int shift_step = 2;                            // coarse step; refinement uses 1
    bool prune_after_band = false;                 // keep only the best candidate after band 0
    int threads = 0;                               // 0 = all cores

    void validate() const;                         // throws std::invalid_argument
};

struct RefineTraceRow {
    int band = 0;
    int iteration = 0;
    double alpha = 0, beta = 0, gamma = 0;
    double score = 0;
    double grad_norm = 0;
};

struct RefineResult {
    Rotation rotation;
    double score = 0.0;
    bool converged = false;
    std::vector<RefineTraceRow> trace;
    std::map<int, long> evaluations_per_band;
};

struct Candidate {
    Rotation rotation;
    double score = 0.0;
};

// Smallest L with energy_ratio(xi, L) <= tau for each threshold tau;
// deduplicated, ascending.
std::vector<int> select_bands(const XiBlocks& xi, const std::vector<double>& thresholds);

// Strict local maxima of the band-l_low correlation on a uniform ZYZ Euler
// grid (wraparound in alpha and gamma), best-first, at most max_candidates.
// With a wedge-power kernel the score is the constrained correlation
// C(g) / sqrt(1 - rho(g)).
std::vector<Candidate> seed_candidates(const XiBlocks& xi, int l_low, double grid_step,
                                       int max_candidates,
                                       const XiBlocks* wedge_power = nullptr);

// Frequency-marching damped-Newton ascent over the given bands.
RefineResult refine(const XiBlocks& xi, const Rotation& start, const std::vector<int>& bands,
                    const OptimizerConfig& cfg, const XiBlocks* wedge_power = nullptr);

struct AlignmentResult {
    std::array<int, 3> shift{0, 0, 0};
    // Rotation that maps the template onto the re-centred subtomogram
    // (for phantoms this matches the rotation that was applied).
    Rotation rotation;
    double score = 0.0;  // C normalized by the two expansion norms
    bool converged = false;
    long candidates_evaluated = 0;
    std::map<int, long> evaluations_per_band;
    std::vector<int> bands;
    double template_norm = 0.0;
    double subtomo_norm = 0.0;
    double wall_time_s = 0.0;
    double expand_template_s = 0.0;
    double coarse_search_s = 0.0;
    double fine_search_s = 0.0;
    std::vector<RefineTraceRow> trace;  // winning candidate only
};

// Full alignment driver: one template expansion, optional missing-wedge
// restriction of the subtomogram to its measured Fourier region, then a
// coarse-to-fine integer shift search with per-shift rotation search.
AlignmentResult align(const Volume& tmpl, const Volume& subtomo, const OptimizerConfig& cfg,
                      const std::optional<WedgeMask>& wedge = std::nullopt);

struct BaselineResult {
    Rotation rotation;
    double score = 0.0;
    long evaluations = 0;
};

// Exhaustive evaluation on the full uniform ZYZ grid at band l_cut.
BaselineResult exhaustive_baseline(const XiBlocks& xi, int l_cut, double angular_step);

// Grid cardinality of the exhaustive baseline at a given angular step.
long baseline_evaluation_count(double angular_step);

// Side-by-side comparison of align against the exhaustive grid baseline,
// run on the kernel of align's winning shift.
struct BenchReport {
    AlignmentResult alignment;
    BaselineResult baseline;       // same template->particle convention as align
    double baseline_step_deg = 5.0;
    int baseline_band = 0;
    long align_evaluations = 0;
    double align_error_deg = -1.0;     // vs ground truth, when given
    double baseline_error_deg = -1.0;
    double matched_step_deg = 0.0;     // step whose grid matches align's achieved accuracy
    long matched_evaluations = 0;      // grid cardinality at that step
    double evaluation_ratio = 0.0;     // align_evaluations / matched_evaluations
    double align_seconds = 0.0;
    double baseline_seconds = 0.0;
};

BenchReport run_bench(const Volume& tmpl, const Volume& subtomo, const OptimizerConfig& cfg,
                      const std::optional<WedgeMask>& wedge,
                      const std::optional<Rotation>& true_rotation,
                      const std::optional<std::array<int, 3>>& true_shift,
                      double baseline_step_deg, int baseline_band);

}  // namespace ballmatch
