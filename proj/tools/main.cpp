#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "ballmatch/optimize.hpp"
#include "ballmatch/philox.hpp"
#include "ballmatch/steer.hpp"
#include "ballmatch/volio.hpp"

using namespace ballmatch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

// exit-code contract: 0 success, 2 usage, 3 non-convergence, 4 I/O
enum ExitCode : int { kOk = 0, kUsage = 2, kNoConverge = 3, kIo = 4 };

json rotation_json(const Rotation& g) {
    const EulerZyz e = g.euler_zyz();
    return {{"quaternion_wxyz", {g.w(), g.x(), g.y(), g.z()}},
            {"euler_zyz_deg",
             {e.alpha * 180.0 / kPi, e.beta * 180.0 / kPi, e.gamma * 180.0 / kPi}}};
}

Rotation rotation_from_json(const json& j) {
    const auto q = j.at("quaternion_wxyz");
    return Rotation(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                    q.at(3).get<double>());
}

json config_json(const OptimizerConfig& cfg, std::optional<double> wedge_theta) {
    json j{{"l_max", cfg.l_max},
           {"lambda_cut", cfg.lambda_cut},
           {"bands", cfg.fixed_bands},
           {"auto_bands", cfg.auto_bands},
           {"band_thresholds", cfg.band_thresholds},
           {"seed_grid_step_deg", cfg.seed_grid_step * 180.0 / kPi},
           {"max_candidates", cfg.max_candidates},
           {"newton_max_iter", cfg.newton_max_iter},
           {"grad_tol", cfg.grad_tol},
           {"step_damping", cfg.step_damping},
           {"shift_radius", cfg.shift_radius},
           {"shift_step", cfg.shift_step},
           {"threads", cfg.threads},
           {"generator", kGeneratorName}};
    if (wedge_theta) j["wedge_theta_deg"] = *wedge_theta;
    return j;
}

json result_json(const AlignmentResult& r) {
    json evals = json::object();
    for (const auto& [band, n] : r.evaluations_per_band) evals[std::to_string(band)] = n;
    return {{"shift_voxels", r.shift},
            {"rotation", rotation_json(r.rotation)},
            {"score", r.score},
            {"converged", r.converged},
            {"candidates_evaluated", r.candidates_evaluated},
            {"evaluations_per_band", evals},
            {"bands", r.bands},
            {"template_norm", r.template_norm},
            {"subtomo_norm", r.subtomo_norm},
            {"timings",
             {{"expand_template_s", r.expand_template_s},
              {"coarse_search_s", r.coarse_search_s},
              {"fine_search_s", r.fine_search_s},
              {"wall_s", r.wall_time_s}}}};
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed for " + path.string());
}

struct AlignFlags {
    std::string template_path, subtomo_path, report_path, truth_path;
    std::vector<int> bands{7, 12, 33};
    int l_max = 42;
    double lambda_cut = 0.0;
    bool auto_bands = false;
    std::vector<double> thresholds{0.5, 0.25, 0.05};
    double wedge_theta = 0.0;  // 0 = no wedge compensation
    int shift_radius = 4;
    int shift_step = 2;
    double grid_step_deg = 22.5;
    int max_candidates = 20;
    int newton_max_iter = 30;
    int threads = 0;

    void add_to(CLI::App* cmd, bool need_inputs = true) {
        cmd->add_option("--template", template_path, "template MRC file")
            ->required(need_inputs);
        cmd->add_option("--subtomo", subtomo_path, "subtomogram MRC file")
            ->required(need_inputs);
        cmd->add_option("--bands", bands, "band schedule, increasing (default 7,12,33)")
            ->delimiter(',');
        cmd->add_option("--lmax", l_max, "degree band limit (default 42)");
        cmd->add_option("--lambda-cut", lambda_cut,
                        "eigen-frequency cutoff (default: grid Nyquist)");
        cmd->add_flag("--auto-bands", auto_bands,
                      "select bands from the energy ratio instead of --bands");
        cmd->add_option("--band-thresholds", thresholds,
                        "energy-ratio thresholds for --auto-bands")
            ->delimiter(',');
        cmd->add_option("--wedge", wedge_theta,
                        "missing-wedge half-angle in degrees for compensation");
        cmd->add_option("--shift-radius", shift_radius, "shift search radius, voxels");
        cmd->add_option("--shift-step", shift_step, "coarse shift step, voxels");
        cmd->add_option("--grid-step-deg", grid_step_deg, "seeding grid step, degrees");
        cmd->add_option("--max-candidates", max_candidates, "candidates refined per shift");
        cmd->add_option("--newton-max-iter", newton_max_iter, "Newton iterations per band");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_option("--report", report_path, "write the JSON run report here");
        cmd->add_option("--truth", truth_path, "truth.json for error reporting");
    }

    OptimizerConfig config() const {
        OptimizerConfig cfg;
        cfg.l_max = l_max;
        cfg.lambda_cut = lambda_cut;
        cfg.fixed_bands = bands;
        cfg.auto_bands = auto_bands;
        cfg.band_thresholds = thresholds;
        cfg.seed_grid_step = grid_step_deg * kPi / 180.0;
        cfg.max_candidates = max_candidates;
        cfg.newton_max_iter = newton_max_iter;
        cfg.shift_radius = shift_radius;
        cfg.shift_step = shift_step;
        cfg.threads = threads;
        return cfg;
    }

    std::optional<WedgeMask> wedge(int n) const {
        if (wedge_theta <= 0.0) return std::nullopt;
        return build_wedge_mask(n, wedge_theta);
    }
};

json truth_comparison(const json& truth, const AlignmentResult& res) {
    json cmp;
    const Rotation g_true = rotation_from_json(truth.at("rotation"));
    cmp["geodesic_error_deg"] = geodesic_degrees(res.rotation, g_true);
    if (truth.contains("shift_voxels")) {
        const auto ts = truth.at("shift_voxels");
        json d = json::array();
        bool exact = true;
        for (int i = 0; i < 3; ++i) {
            const int delta = res.shift[i] - ts.at(i).get<int>();
            d.push_back(delta);
            exact &= delta == 0;
        }
        cmp["shift_error_voxels"] = d;
        cmp["shift_exact"] = exact;
    }
    return cmp;
}

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

int cmd_phantom(int n, int blobs, std::uint64_t seed, double snr, double wedge,
                const std::vector<double>& rot_euler_deg, const std::vector<int>& shift,
                const std::string& out_dir) {
    PhantomSpec ps;
    ps.n = n;
    ps.blobs = blobs;
    ps.seed = seed;
    if (snr > 0.0) ps.snr = snr;
    if (wedge > 0.0) ps.wedge_theta_deg = wedge;
    if (!rot_euler_deg.empty()) {
        if (rot_euler_deg.size() != 3)
            throw CLI::ValidationError("--rot-euler", "expects alpha,beta,gamma in degrees");
        ps.rotation = Rotation::from_euler_zyz(rot_euler_deg[0] * kPi / 180.0,
                                               rot_euler_deg[1] * kPi / 180.0,
                                               rot_euler_deg[2] * kPi / 180.0);
    }
    if (!shift.empty()) {
        if (shift.size() != 3) throw CLI::ValidationError("--shift", "expects x,y,z voxels");
        ps.shift = {{shift[0], shift[1], shift[2]}};
    }

    const Phantom ph = make_phantom(ps);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_mrc(ph.tmpl, dir / "template.mrc");
    write_mrc(ph.subtomo, dir / "subtomo.mrc");

    json truth{{"generator", kGeneratorName},
               {"seed", seed},
               {"n", n},
               {"blobs", blobs},
               {"support_radius", ps.support_radius},
               {"rotation", rotation_json(ph.rotation)},
               {"shift_voxels", ph.shift},
               {"noise_sigma", ph.noise_sigma}};
    if (ps.snr) truth["snr"] = *ps.snr;
    if (ps.wedge_theta_deg) truth["wedge_theta_deg"] = *ps.wedge_theta_deg;
    write_json(truth, dir / "truth.json");

    std::cout << "phantom: wrote template.mrc, subtomo.mrc, truth.json to " << dir.string()
              << "\n";
    return kOk;
}

int cmd_align(const AlignFlags& flags) {
    const Volume tmpl = read_mrc(flags.template_path);
    const Volume sub = read_mrc(flags.subtomo_path);
    const OptimizerConfig cfg = flags.config();
    cfg.validate();

    const AlignmentResult res = align(tmpl, sub, cfg, flags.wedge(tmpl.n));

    json report{{"version", kVersion},
                {"command", "align"},
                {"config", config_json(cfg, flags.wedge_theta > 0.0
                                                ? std::optional<double>(flags.wedge_theta)
                                                : std::nullopt)},
                {"result", result_json(res)}};

    // per-band energy ratios of the winning shift's kernel
    {
        const double cut =
            cfg.lambda_cut > 0.0 ? cfg.lambda_cut : default_lambda_cut(tmpl.n, cfg.l_max);
        const BasisSpec spec = build_spec(cfg.l_max, cut);
        const Volume f_w = flags.wedge_theta > 0.0
                               ? apply_wedge(sub, *flags.wedge(tmpl.n))
                               : sub;
        const XiBlocks xi = xi_coefficients(expand(shift_volume(f_w, res.shift), spec),
                                            expand(tmpl, spec));
        json ratios = json::array();
        for (int band : res.bands)
            ratios.push_back({{"band", band}, {"energy_ratio", energy_ratio(xi, band)}});
        report["energy_ratio_per_band"] = ratios;
        report["config"]["lambda_cut_effective"] = cut;
    }

    if (!flags.truth_path.empty())
        report["truth_comparison"] = truth_comparison(load_json(flags.truth_path), res);

    if (!flags.report_path.empty()) write_json(report, flags.report_path);

    const EulerZyz e = res.rotation.euler_zyz();
    std::cout << "align: shift = (" << res.shift[0] << ", " << res.shift[1] << ", "
              << res.shift[2] << ")  euler_zyz_deg = (" << e.alpha * 180.0 / kPi << ", "
              << e.beta * 180.0 / kPi << ", " << e.gamma * 180.0 / kPi << ")  score = "
              << res.score << "  converged = " << (res.converged ? "yes" : "no") << "\n";
    if (report.contains("truth_comparison"))
        std::cout << "align: geodesic error vs truth = "
                  << report["truth_comparison"]["geodesic_error_deg"].get<double>()
                  << " deg\n";
    return res.converged ? kOk : kNoConverge;
}

int cmd_bandscan(const AlignFlags& flags, const std::vector<int>& shift,
                 const std::string& out_path) {
    const Volume tmpl = read_mrc(flags.template_path);
    const Volume sub = read_mrc(flags.subtomo_path);
    std::array<int, 3> s{0, 0, 0};
    if (!shift.empty()) {
        if (shift.size() != 3) throw CLI::ValidationError("--shift", "expects x,y,z voxels");
        s = {shift[0], shift[1], shift[2]};
    }
    const double cut = flags.lambda_cut > 0.0 ? flags.lambda_cut
                                              : default_lambda_cut(tmpl.n, flags.l_max);
    const BasisSpec spec = build_spec(flags.l_max, cut);
    const Volume f_w =
        flags.wedge_theta > 0.0 ? apply_wedge(sub, *flags.wedge(tmpl.n)) : sub;
    const XiBlocks xi =
        xi_coefficients(expand(shift_volume(f_w, s), spec), expand(tmpl, spec), s);

    std::ostringstream csv;
    csv << "band,energy_ratio,eval_cost_fraction\n";
    for (int l = 0; l <= flags.l_max; ++l)
        csv << l << "," << energy_ratio(xi, l) << "," << eval_cost_fraction(l, flags.l_max)
            << "\n";

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw io_error("cannot open " + out_path);
        out << csv.str();
        std::cout << "bandscan: wrote " << (flags.l_max + 1) << " rows to " << out_path << "\n";
    }
    return kOk;
}

int cmd_bench(const AlignFlags& flags, double baseline_step_deg, int baseline_band) {
    const Volume tmpl = read_mrc(flags.template_path);
    const Volume sub = read_mrc(flags.subtomo_path);
    const OptimizerConfig cfg = flags.config();
    cfg.validate();

    std::optional<Rotation> g_true;
    std::optional<std::array<int, 3>> s_true;
    json truth;
    if (!flags.truth_path.empty()) {
        truth = load_json(flags.truth_path);
        g_true = rotation_from_json(truth.at("rotation"));
        if (truth.contains("shift_voxels")) {
            const auto ts = truth.at("shift_voxels");
            s_true = {{ts.at(0).get<int>(), ts.at(1).get<int>(), ts.at(2).get<int>()}};
        }
    }
    if (baseline_band < 0) baseline_band = cfg.fixed_bands.front();

    const BenchReport rep = run_bench(tmpl, sub, cfg, flags.wedge(tmpl.n), g_true, s_true,
                                      baseline_step_deg, baseline_band);

    json report{
        {"version", kVersion},
        {"command", "bench"},
        {"config", config_json(cfg, flags.wedge_theta > 0.0
                                        ? std::optional<double>(flags.wedge_theta)
                                        : std::nullopt)},
        {"align",
         {{"result", result_json(rep.alignment)},
          {"evaluations_total", rep.align_evaluations},
          {"seconds", rep.align_seconds}}},
        {"baseline",
         {{"band", rep.baseline_band},
          {"step_deg", rep.baseline_step_deg},
          {"evaluations", rep.baseline.evaluations},
          {"score", rep.baseline.score},
          {"rotation", rotation_json(rep.baseline.rotation)},
          {"seconds", rep.baseline_seconds}}},
        {"matched",
         {{"step_deg", rep.matched_step_deg}, {"evaluations", rep.matched_evaluations}}},
        {"evaluation_ratio_align_over_matched", rep.evaluation_ratio},
        {"speedup_matched_over_align", rep.evaluation_ratio > 0.0
                                           ? 1.0 / rep.evaluation_ratio
                                           : 0.0}};
    if (g_true) {
        report["errors"] = {{"align_deg", rep.align_error_deg},
                            {"baseline_deg", rep.baseline_error_deg}};
    }
    if (!flags.report_path.empty()) write_json(report, flags.report_path);

    std::cout << "bench: align evals = " << rep.align_evaluations
              << ", baseline(step " << rep.baseline_step_deg
              << " deg) evals = " << rep.baseline.evaluations
              << ", matched(step " << rep.matched_step_deg
              << " deg) evals = " << rep.matched_evaluations
              << ", ratio = " << rep.evaluation_ratio << "\n";
    if (g_true)
        std::cout << "bench: align error = " << rep.align_error_deg
                  << " deg, baseline error = " << rep.baseline_error_deg << " deg\n";
    return rep.alignment.converged ? kOk : kNoConverge;
}

int cmd_expand(const std::string& in_path, int l_max, double lambda_cut,
               const std::string& out_path, const std::string& bin_path) {
    const Volume v = read_mrc(in_path);
    const double cut = lambda_cut > 0.0 ? lambda_cut : default_lambda_cut(v.n, l_max);
    const BasisSpec spec = build_spec(l_max, cut);
    const BallExpansion e = expand(v, spec);

    json per_band = json::array();
    for (int l = 0; l <= l_max; ++l) {
        double en = 0.0;
        const cdouble* blk = e.block(l);
        const std::size_t cnt = static_cast<std::size_t>(spec.radial_count(l)) * (2 * l + 1);
        for (std::size_t i = 0; i < cnt; ++i) en += std::norm(blk[i]);
        per_band.push_back({{"band", l}, {"energy", en}, {"radial_count", spec.radial_count(l)}});
    }
    json j{{"version", kVersion}, {"command", "expand"},    {"n", v.n},
           {"l_max", l_max},      {"lambda_cut", cut},      {"coeff_count", e.coeffs().size()},
           {"energy", e.energy()}, {"energy_per_band", per_band}};
    if (!bin_path.empty()) {
        std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
        if (!bin) throw io_error("cannot open " + bin_path);
        bin.write(reinterpret_cast<const char*>(e.coeffs().data()),
                  static_cast<std::streamsize>(e.coeffs().size() * sizeof(cdouble)));
        j["coeffs_bin"] = bin_path;
        j["coeffs_layout"] = "per degree l: k rows of 2l+1 complex<double> (m = -l..l), little-endian";
    }
    write_json(j, out_path);
    std::cout << "expand: " << e.coeffs().size() << " coefficients, energy " << e.energy()
              << ", report " << out_path << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ballmatch: subtomogram alignment in the ball-harmonics domain"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // phantom
    auto* phantom = app.add_subcommand("phantom", "generate a synthetic template/subtomogram pair");
    int ph_n = 64, ph_blobs = 6;
    std::uint64_t ph_seed = 0;
    double ph_snr = 0.0, ph_wedge = 0.0;
    std::vector<double> ph_rot;
    std::vector<int> ph_shift;
    std::string ph_out;
    phantom->add_option("--n", ph_n, "grid size (even, >= 8)");
    phantom->add_option("--blobs", ph_blobs, "number of Gaussian blobs");
    phantom->add_option("--seed", ph_seed, "random seed");
    phantom->add_option("--snr", ph_snr, "signal/noise variance ratio (0 = noiseless)");
    phantom->add_option("--wedge", ph_wedge, "missing-wedge half-angle, degrees (0 = none)");
    phantom->add_option("--rot-euler", ph_rot, "true rotation: ZYZ Euler degrees a,b,c")
        ->delimiter(',');
    phantom->add_option("--shift", ph_shift, "true shift in voxels x,y,z")->delimiter(',');
    phantom->add_option("--out-dir", ph_out, "output directory")->required();

    // align
    auto* align_cmd = app.add_subcommand("align", "align a template to a subtomogram");
    AlignFlags align_flags;
    align_flags.add_to(align_cmd);

    // bandscan
    auto* bandscan = app.add_subcommand("bandscan", "energy ratio and cost fraction per band");
    AlignFlags scan_flags;
    scan_flags.add_to(bandscan);
    std::vector<int> scan_shift;
    std::string scan_out;
    bandscan->add_option("--shift", scan_shift, "shift of the kernel, voxels x,y,z")
        ->delimiter(',');
    bandscan->add_option("--out", scan_out, "CSV output path (default: stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "align vs exhaustive-grid baseline");
    AlignFlags bench_flags;
    bench_flags.add_to(bench);
    double bench_step = 6.0;
    int bench_band = -1;
    bench->add_option("--baseline-step", bench_step, "baseline grid step, degrees");
    bench->add_option("--baseline-band", bench_band,
                      "band for the baseline sweep (default: lowest align band)");

    // expand
    auto* expand_cmd = app.add_subcommand("expand", "expand a volume into ball harmonics");
    std::string ex_in, ex_out = "expansion.json", ex_bin;
    int ex_lmax = 42;
    double ex_cut = 0.0;
    expand_cmd->add_option("--in", ex_in, "input MRC volume")->required();
    expand_cmd->add_option("--lmax", ex_lmax, "degree band limit");
    expand_cmd->add_option("--lambda-cut", ex_cut, "eigen-frequency cutoff");
    expand_cmd->add_option("--out", ex_out, "JSON summary path");
    expand_cmd->add_option("--coeffs-bin", ex_bin, "raw coefficient dump path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kUsage;
    }

    try {
        if (*phantom)
            return cmd_phantom(ph_n, ph_blobs, ph_seed, ph_snr, ph_wedge, ph_rot, ph_shift,
                               ph_out);
        if (*align_cmd) return cmd_align(align_flags);
        if (*bandscan) return cmd_bandscan(scan_flags, scan_shift, scan_out);
        if (*bench) return cmd_bench(bench_flags, bench_step, bench_band);
        if (*expand_cmd) return cmd_expand(ex_in, ex_lmax, ex_cut, ex_out, ex_bin);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsage;
}
