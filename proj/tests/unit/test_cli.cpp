#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "focidose/csv.hpp"

using namespace focidose;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs the installed binary through the shell, capturing stdout+stderr.
CliResult run_cli(const fs::path& dir, const std::string& args) {
    const fs::path log = dir / "cli_output.txt";
    const std::string command = std::string(FOCIDOSE_CLI_PATH) + " " + args + " > " +
                                log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    result.output = buffer.str();
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "focidose_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

const char* kParamsText =
    "focidose-params-v1\n"
    "k 2\n"
    "shared_u 1\n"
    "weights 0.3 0.7\n"
    "component 1 0.8 0.5 -0.3\n"
    "component 2 2.5 1.5 -0.5\n"
    "u -0.2\n"
    "end\n";

const char* kDesignText =
    "dose_gy,time_h,cell_count\n"
    "0,0.5,300\n1,0.5,300\n2,0.5,300\n3,0.5,300\n"
    "0,2,300\n1,2,300\n2,2,300\n3,2,300\n"
    "0,24,300\n1,24,300\n2,24,300\n3,24,300\n";

}  // namespace

TEST_CASE("calibration ingestion: valid, aggregated and malformed rows") {
    TempDir dir;
    const fs::path csv = dir.path / "data.csv";

    write_file(csv,
               "dose_gy,time_h,foci_count\n0,0.5,3\n1,0.5,5\n2,2,4\n");
    const CalibrationDataset plain = read_calibration_csv(csv);
    CHECK(plain.size() == 3);

    write_file(csv,
               "dose_gy,time_h,foci_count,cell_count\n"
               "2.0,0.5,7,15\n0,2,1,2\n");
    const CalibrationDataset aggregated = read_calibration_csv(csv);
    CHECK(aggregated.size() == 17);
    int sevens = 0;
    for (const FociRecord& r : aggregated.records())
        if (r.count == 7) ++sevens;
    CHECK(sevens == 15);

    write_file(csv, "dose_gy,time_h,foci_count\n0,0.5,3\n-1,0.5,2\n1,1,1\n");
    CHECK_THROWS_WITH_AS(read_calibration_csv(csv), doctest::Contains(":3"),
                         ParseError);

    write_file(csv, "dose_gy,time_h,foci_count\n0,0.5,3\n1,0.5,abc\n");
    CHECK_THROWS_WITH_AS(read_calibration_csv(csv), doctest::Contains("column 3"),
                         ParseError);

    write_file(csv, "dose,time,count\n0,0.5,3\n");
    CHECK_THROWS_WITH_AS(read_calibration_csv(csv), doctest::Contains("header"),
                         ParseError);

    write_file(csv, "dose_gy,time_h,foci_count\n0,0.5,300\n1,1,1\n");
    CHECK_THROWS_WITH_AS(read_calibration_csv(csv), doctest::Contains("ceiling"),
                         ParseError);
}

TEST_CASE("simulate -> calibrate -> estimate round trip with byte-stable artifacts") {
    TempDir dir;
    write_file(dir.path / "params.txt", kParamsText);
    write_file(dir.path / "design.csv", kDesignText);

    const auto sim = run_cli(dir.path, "simulate --params " +
                                           (dir.path / "params.txt").string() +
                                           " --design " +
                                           (dir.path / "design.csv").string() +
                                           " --seed 5 --out " +
                                           (dir.path / "data.csv").string());
    REQUIRE(sim.exit_code == 0);

    const std::string calibrate_args =
        "calibrate " + (dir.path / "data.csv").string() +
        " --k 2 --shared-u --starts 6 --seed 9 --out ";
    const auto cal1 =
        run_cli(dir.path, calibrate_args + (dir.path / "a1.txt").string());
    REQUIRE(cal1.exit_code == 0);
    CHECK(cal1.output.find("selected K=2") != std::string::npos);

    // sweep form prints one candidate row per K
    const auto sweep = run_cli(dir.path, "calibrate " +
                                             (dir.path / "data.csv").string() +
                                             " --k-sweep 1..2 --starts 4 --seed 9");
    REQUIRE(sweep.exit_code == 0);
    CHECK(sweep.output.find("K=1 u=shared p=4") != std::string::npos);
    CHECK(sweep.output.find("K=2 u=shared p=8") != std::string::npos);
    const auto cal2 =
        run_cli(dir.path, calibrate_args + (dir.path / "a2.txt").string());
    REQUIRE(cal2.exit_code == 0);
    CHECK(slurp(dir.path / "a1.txt") == slurp(dir.path / "a2.txt"));

    // the artifact alone drives estimation: identical artifacts from two
    // "laboratories" give identical answers with no raw-data access
    const std::string estimate_args =
        "estimate --mean 4.1 --se 0.23 --n 500 --time-prior uniform:1.5,2.5 "
        "--method mc --draws 20000 --seed 3 --calibration ";
    const auto est1 =
        run_cli(dir.path, estimate_args + (dir.path / "a1.txt").string());
    const auto est2 =
        run_cli(dir.path, estimate_args + (dir.path / "a2.txt").string());
    REQUIRE(est1.exit_code == 0);
    CHECK(est1.output == est2.output);
    CHECK(est1.output.find("median_gy") != std::string::npos);

    // density grid export
    const auto est3 = run_cli(
        dir.path, "estimate --calibration " + (dir.path / "a1.txt").string() +
                      " --mean 4.1 --se 0.23 --time-prior uniform:1.5,2.5 "
                      "--out-density " +
                      (dir.path / "density.csv").string());
    REQUIRE(est3.exit_code == 0);
    const std::string density = slurp(dir.path / "density.csv");
    CHECK(density.rfind("dose_gy,density\n", 0) == 0);

    // results do not depend on the worker count, only on the seed
    const auto mc1 = run_cli(dir.path, estimate_args + (dir.path / "a1.txt").string() +
                                           " --threads 1");
    const auto mc2 = run_cli(dir.path, estimate_args + (dir.path / "a1.txt").string() +
                                           " --threads 2");
    CHECK(mc1.output == mc2.output);

    // surface export: mu column affine in dose at fixed time
    const auto sur = run_cli(
        dir.path, "surface --calibration " + (dir.path / "a1.txt").string() +
                      " --doses 0,1,2,3 --times 2 --out " +
                      (dir.path / "grid.csv").string());
    REQUIRE(sur.exit_code == 0);
    std::ifstream grid(dir.path / "grid.csv");
    std::string line;
    std::getline(grid, line);
    CHECK(line == "dose_gy,time_h,mu,sd");
    std::vector<double> mu;
    while (std::getline(grid, line)) {
        const auto c2 = line.find(',', line.find(',') + 1);
        const auto c3 = line.find(',', c2 + 1);
        mu.push_back(std::stod(line.substr(c2 + 1, c3 - c2 - 1)));
    }
    REQUIRE(mu.size() == 4);
    CHECK(std::abs((mu[2] - mu[1]) - (mu[1] - mu[0])) < 1e-10);
    CHECK(std::abs((mu[3] - mu[2]) - (mu[2] - mu[1])) < 1e-10);
}

TEST_CASE("error paths exit nonzero and leave no partial files") {
    TempDir dir;

    // usage error: unknown flag
    CHECK(run_cli(dir.path, "estimate --nonsense").exit_code == 2);
    // usage error: missing subcommand
    CHECK(run_cli(dir.path, "").exit_code == 2);

    // domain error: malformed csv
    write_file(dir.path / "bad.csv", "dose_gy,time_h,foci_count\n-1,1,2\n");
    const auto bad = run_cli(dir.path, "calibrate " + (dir.path / "bad.csv").string() +
                                           " --k 1 --out " +
                                           (dir.path / "should_not_exist.txt").string());
    CHECK(bad.exit_code == 1);
    CHECK(!fs::exists(dir.path / "should_not_exist.txt"));

    // invalid prior spec fails before any output file is written
    write_file(dir.path / "params.txt", kParamsText);
    write_file(dir.path / "design.csv", kDesignText);
    run_cli(dir.path, "simulate --params " + (dir.path / "params.txt").string() +
                          " --design " + (dir.path / "design.csv").string() +
                          " --seed 5 --out " + (dir.path / "data.csv").string());
    run_cli(dir.path, "calibrate " + (dir.path / "data.csv").string() +
                          " --k 1 --starts 4 --seed 2 --out " +
                          (dir.path / "calib.txt").string());
    const auto est = run_cli(
        dir.path, "estimate --calibration " + (dir.path / "calib.txt").string() +
                      " --mean 4 --se 0.2 --time-prior uniform:9,3 --out-density " +
                      (dir.path / "density.csv").string());
    CHECK(est.exit_code == 1);
    CHECK(!fs::exists(dir.path / "density.csv"));

    // zero-cell design points are skipped with a warning
    write_file(dir.path / "design0.csv",
               "dose_gy,time_h,cell_count\n0,1,50\n1,1,0\n1,2,50\n0,2,50\n");
    const auto sim = run_cli(
        dir.path, "simulate --params " + (dir.path / "params.txt").string() +
                      " --design " + (dir.path / "design0.csv").string() +
                      " --seed 1 --out " + (dir.path / "zero.csv").string());
    CHECK(sim.exit_code == 0);
    CHECK(sim.output.find("skipping design point") != std::string::npos);
}

TEST_CASE("oracle subcommand emits a machine-readable report") {
    TempDir dir;
    const auto res = run_cli(dir.path, "oracle run-all --seed 20240817 --out " +
                                           (dir.path / "report.csv").string());
    CHECK(res.exit_code == 0);
    const std::string report = slurp(dir.path / "report.csv");
    CHECK(report.rfind("check,statistic,threshold,pass,seed,sample_size\n", 0) == 0);
    CHECK(report.find("kummer_closed_vs_series") != std::string::npos);
    CHECK(report.find("delta_covariance_vs_sampling") != std::string::npos);
}
