#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = BALLMATCH_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "ballmatch_cli_out.txt";
    const std::string cmd = kCli.string() + " " + args + " > " + out.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path work_dir() {
    const fs::path d = fs::temp_directory_path() / "ballmatch_cli_tests";
    fs::create_directories(d);
    return d;
}

json load(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small shared phantom + alignment flags, sized for test speed
const std::string kPhantomArgs = "--n 48 --blobs 4 --seed 7 --rot-euler 25,50,-40 --shift 2,-1,1";
const std::string kAlignArgs = "--lmax 16 --bands 4,8,14 --shift-radius 2";

}  // namespace

TEST_CASE("phantom: determinism, truth file, usage errors") {
    const fs::path d1 = work_dir() / "ph1";
    const fs::path d2 = work_dir() / "ph2";
    CHECK(run("phantom " + kPhantomArgs + " --out-dir " + d1.string()).exit_code == 0);
    CHECK(run("phantom " + kPhantomArgs + " --out-dir " + d2.string()).exit_code == 0);
    CHECK(file_bytes(d1 / "template.mrc") == file_bytes(d2 / "template.mrc"));
    CHECK(file_bytes(d1 / "subtomo.mrc") == file_bytes(d2 / "subtomo.mrc"));

    const json truth = load(d1 / "truth.json");
    const auto q = truth.at("rotation").at("quaternion_wxyz");
    double norm = 0.0;
    for (const auto& c : q) norm += c.get<double>() * c.get<double>();
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(truth.at("generator") == "philox4x32-10");
    CHECK(truth.at("shift_voxels") == json::array({2, -1, 1}));

    // missing --out-dir is a usage error
    CHECK(run("phantom --n 32 --seed 1").exit_code == 2);
}

TEST_CASE("align: self-alignment, reports, exit codes") {
    const fs::path d = work_dir() / "align";
    REQUIRE(run("phantom " + kPhantomArgs + " --out-dir " + d.string()).exit_code == 0);

    const fs::path report = d / "report.json";
    const RunResult self = run("align --template " + (d / "template.mrc").string() +
                               " --subtomo " + (d / "template.mrc").string() + " " + kAlignArgs +
                               " --report " + report.string());
    CHECK(self.exit_code == 0);
    const json rep = load(report);
    CHECK(rep.at("result").at("shift_voxels") == json::array({0, 0, 0}));
    const auto euler = rep.at("result").at("rotation").at("euler_zyz_deg");
    // identity up to 0.1 degree: compare via the quaternion scalar part
    const auto q = rep.at("result").at("rotation").at("quaternion_wxyz");
    CHECK(std::abs(q.at(0).get<double>()) > std::cos(0.05 * 3.14159 / 180.0));
    (void)euler;
    CHECK(rep.at("result").at("converged").get<bool>());
    CHECK(rep.at("config").at("l_max") == 16);

    // JSON report round-trips through parse
    std::ofstream(d / "copy.json") << rep.dump();
    CHECK(load(d / "copy.json") == rep);

    // known truth: geodesic error reported and small
    const RunResult full = run("align --template " + (d / "template.mrc").string() +
                               " --subtomo " + (d / "subtomo.mrc").string() + " " + kAlignArgs +
                               " --truth " + (d / "truth.json").string() + " --report " +
                               report.string());
    CHECK(full.exit_code == 0);
    const json rep2 = load(report);
    CHECK(rep2.at("truth_comparison").at("geodesic_error_deg").get<double>() < 0.5);
    CHECK(rep2.at("truth_comparison").at("shift_exact").get<bool>());

    // non-increasing bands are a usage error
    CHECK(run("align --template " + (d / "template.mrc").string() + " --subtomo " +
              (d / "subtomo.mrc").string() + " --lmax 16 --bands 8,8,14")
              .exit_code == 2);
    // missing file is an I/O error
    CHECK(run("align --template " + (d / "nope.mrc").string() + " --subtomo " +
              (d / "subtomo.mrc").string())
              .exit_code == 4);
}

TEST_CASE("align: --threads 1 and --threads N give identical reports") {
    const fs::path d = work_dir() / "threads";
    REQUIRE(run("phantom " + kPhantomArgs + " --out-dir " + d.string()).exit_code == 0);
    const std::string base = "align --template " + (d / "template.mrc").string() +
                             " --subtomo " + (d / "subtomo.mrc").string() + " " + kAlignArgs;
    REQUIRE(run(base + " --threads 1 --report " + (d / "r1.json").string()).exit_code == 0);
    REQUIRE(run(base + " --threads 4 --report " + (d / "r4.json").string()).exit_code == 0);
    json a = load(d / "r1.json");
    json b = load(d / "r4.json");
    // wall-clock fields may differ; numeric results must not
    a.at("result").erase("timings");
    b.at("result").erase("timings");
    a.at("config").erase("threads");
    b.at("config").erase("threads");
    CHECK(a == b);
}

TEST_CASE("bandscan: CSV shape and monotonicity") {
    const fs::path d = work_dir() / "scan";
    REQUIRE(run("phantom " + kPhantomArgs + " --out-dir " + d.string()).exit_code == 0);
    const fs::path csv = d / "scan.csv";
    CHECK(run("bandscan --template " + (d / "template.mrc").string() + " --subtomo " +
              (d / "subtomo.mrc").string() + " --lmax 16 --out " + csv.string())
              .exit_code == 0);

    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "band,energy_ratio,eval_cost_fraction");
    int rows = 0;
    double prev_ratio = 1.1, last_ratio = -1, last_cost = -1;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        CHECK(std::stoi(field) == rows);
        std::getline(ss, field, ',');
        const double ratio = std::stod(field);
        std::getline(ss, field, ',');
        const double cost = std::stod(field);
        CHECK(ratio <= prev_ratio + 1e-12);
        prev_ratio = ratio;
        last_ratio = ratio;
        last_cost = cost;
        ++rows;
    }
    CHECK(rows == 17);  // l_max + 1
    CHECK(last_ratio == doctest::Approx(0.0));
    CHECK(last_cost == doctest::Approx(1.0));
}

TEST_CASE("bench: report structure and efficiency fields") {
    const fs::path d = work_dir() / "bench";
    REQUIRE(run("phantom " + kPhantomArgs + " --out-dir " + d.string()).exit_code == 0);
    const fs::path report = d / "bench.json";
    const RunResult r = run("bench --template " + (d / "template.mrc").string() +
                            " --subtomo " + (d / "subtomo.mrc").string() + " " + kAlignArgs +
                            " --truth " + (d / "truth.json").string() +
                            " --baseline-step 8 --report " + report.string());
    CHECK(r.exit_code == 0);
    const json rep = load(report);
    CHECK(rep.at("align").at("evaluations_total").get<long>() > 0);
    CHECK(rep.at("baseline").at("evaluations").get<long>() > 0);
    CHECK(rep.at("matched").at("evaluations").get<long>() >=
          rep.at("align").at("evaluations_total").get<long>());
    CHECK(rep.at("speedup_matched_over_align").get<double>() >= 1.0);
    CHECK(rep.at("errors").at("align_deg").get<double>() <=
          rep.at("errors").at("baseline_deg").get<double>() + 1e-9);
}

TEST_CASE("expand: summary JSON") {
    const fs::path d = work_dir() / "expand";
    REQUIRE(run("phantom " + kPhantomArgs + " --out-dir " + d.string()).exit_code == 0);
    const fs::path out = d / "exp.json";
    const fs::path bin = d / "exp.bin";
    CHECK(run("expand --in " + (d / "template.mrc").string() + " --lmax 8 --out " +
              out.string() + " --coeffs-bin " + bin.string())
              .exit_code == 0);
    const json j = load(out);
    CHECK(j.at("l_max") == 8);
    CHECK(j.at("coeff_count").get<std::size_t>() > 0);
    CHECK(fs::file_size(bin) == j.at("coeff_count").get<std::size_t>() * 16);
}

TEST_CASE("usage and version") {
    CHECK(run("--version").exit_code == 0);
    CHECK(run("definitely-not-a-command").exit_code == 2);
    CHECK(run("").exit_code == 2);  // a subcommand is required
}
