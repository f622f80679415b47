// focidose: calibrate a dose-time response surface from foci counts and
// estimate absorbed dose for new samples under post-irradiation time
// uncertainty. Exit codes: 0 success, 1 domain/data error, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "focidose/artifact.hpp"
#include "focidose/csv.hpp"
#include "focidose/estimate.hpp"
#include "focidose/model.hpp"
#include "focidose/oracle.hpp"
#include "focidose/priors.hpp"
#include "focidose/surface.hpp"
#include "focidose/version.hpp"

namespace {

using namespace focidose;

std::uint64_t env_seed_default() {
    if (const char* env = std::getenv("FOCIDOSE_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

int env_threads_default() {
    if (const char* env = std::getenv("FOCIDOSE_THREADS"))
        return static_cast<int>(std::strtol(env, nullptr, 10));
    return 0;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ParseError("bad value '" + field + "' in " + std::string(what));
        }
    }
    if (values.empty()) throw ParseError(std::string(what) + " is empty");
    return values;
}

void print_summary(const DosePosterior& posterior) {
    const DoseSummary& s = posterior.summary;
    std::cout << "method "
              << (posterior.method == DoseMethod::Quadrature ? "quadrature"
                                                             : "monte-carlo")
              << "\n";
    std::cout << "median_gy " << format_double(s.median) << "\n";
    std::cout << "mean_gy " << format_double(s.mean) << "\n";
    std::cout << "ci_level " << format_double(s.level) << "\n";
    std::cout << "ci_lower_gy " << format_double(s.lower) << "\n";
    std::cout << "ci_upper_gy " << format_double(s.upper) << "\n";
    if (posterior.method == DoseMethod::MonteCarlo)
        std::cout << "rejection_fraction " << format_double(posterior.rejection_fraction)
                  << "\n";
    for (const std::string& w : posterior.warnings)
        std::cout << "warning " << w << "\n";
}

void print_coefficients(const CalibrationResult& result) {
    std::cout << "k " << result.k << "\n";
    std::cout << "shared_u " << (result.shared_u ? 1 : 0) << "\n";
    std::cout << "p " << result.p() << "\n";
    std::cout << "aic " << format_double(result.aic) << "\n";
    std::cout << "log_posterior_at_mode " << format_double(result.log_posterior_at_mode)
              << "\n";
    for (int j = 0; j < result.k; ++j) {
        const ComponentParams& comp = result.params.components[j];
        std::cout << "component " << j + 1 << " weight "
                  << format_double(result.params.weights[j]) << " a "
                  << format_double(comp.a) << " c " << format_double(comp.c) << " v "
                  << format_double(comp.v);
        if (!result.shared_u) std::cout << " u " << format_double(comp.u);
        std::cout << "\n";
    }
    if (result.shared_u) std::cout << "u " << format_double(result.params.u) << "\n";
    for (const std::string& w : result.warnings) std::cout << "warning " << w << "\n";
}

struct CalibrateArgs {
    std::string data_path;
    int k = 0;
    std::string k_sweep;
    std::string u_mode = "shared";
    int starts = 32;
    std::uint64_t seed = env_seed_default();
    int threads = env_threads_default();
    int max_count = CalibrationDataset::kDefaultMaxCount;
    std::string out_path;
};

int run_calibrate(const CalibrateArgs& args) {
    if ((args.k == 0) == args.k_sweep.empty()) {
        std::cerr << "error: give exactly one of --k or --k-sweep\n";
        return 2;
    }
    UMode u_mode;
    if (args.u_mode == "shared") {
        u_mode = UMode::Shared;
    } else if (args.u_mode == "per-k") {
        u_mode = UMode::PerComponent;
    } else if (args.u_mode == "both") {
        u_mode = UMode::Both;
    } else {
        std::cerr << "error: --u must be shared, per-k or both\n";
        return 2;
    }

    std::vector<int> ks;
    if (args.k > 0) {
        ks.push_back(args.k);
    } else {
        const std::size_t sep = args.k_sweep.find("..");
        if (sep == std::string::npos) {
            std::cerr << "error: --k-sweep must look like 2..5\n";
            return 2;
        }
        const int lo = std::atoi(args.k_sweep.substr(0, sep).c_str());
        const int hi = std::atoi(args.k_sweep.substr(sep + 2).c_str());
        if (lo < 1 || hi < lo) {
            std::cerr << "error: --k-sweep bounds must satisfy 1 <= lo <= hi\n";
            return 2;
        }
        for (int k = lo; k <= hi; ++k) ks.push_back(k);
    }

    const CalibrationDataset data = read_calibration_csv(args.data_path, args.max_count);
    FitConfig config;
    config.starts = args.starts;
    config.seed = args.seed;
    config.threads = args.threads;

    const ModelSelection selection = select_model(data, ks, u_mode, config);
    std::cout << "candidates\n";
    for (const ModelCandidate& row : selection.table) {
        std::cout << "  K=" << row.k << " u=" << (row.shared_u ? "shared" : "per-k")
                  << " p=" << row.p;
        if (row.has_aic) std::cout << " aic=" << format_double(row.aic);
        if (!row.ok) std::cout << " failed: " << row.error;
        std::cout << "\n";
    }
    std::cout << "selected K=" << selection.best.k << " u="
              << (selection.best.shared_u ? "shared" : "per-k") << "\n";
    print_coefficients(selection.best);

    if (!args.out_path.empty()) {
        CalibrationArtifact artifact;
        artifact.tool_version = kVersion;
        artifact.provenance = data.provenance();
        artifact.seed = args.seed;
        artifact.result = selection.best;
        artifact.save(args.out_path);
        std::cout << "artifact " << args.out_path << "\n";
    }
    return 0;
}

struct EstimateArgs {
    std::string calibration_path;
    double mean = 0.0;
    double se = 0.0;
    int n = 500;
    std::string prior_text;
    std::string method = "quad";
    int draws = 100000;
    std::uint64_t seed = env_seed_default();
    double level = 0.95;
    std::string grid_text;
    bool truncate = false;
    int threads = env_threads_default();
    std::string density_path;
};

int run_estimate(const EstimateArgs& args) {
    const CalibrationArtifact artifact = CalibrationArtifact::load(args.calibration_path);
    const TimePrior prior = parse_time_prior(args.prior_text);

    TestSummary test;
    test.n = args.n;
    test.mean = args.mean;
    test.se = args.se;

    DoseGridSpec grid;
    if (!args.grid_text.empty()) {
        const auto values = parse_double_list(args.grid_text, "--grid");
        if (values.size() != 3) throw ParseError("--grid must be lo,hi,step");
        grid.lo_gy = values[0];
        grid.hi_gy = values[1];
        grid.step_gy = values[2];
        grid.auto_widen = false;
    }

    EstimateOptions options;
    options.level = args.level;
    options.truncate_nonnegative = args.truncate;
    options.threads = args.threads;

    DosePosterior posterior;
    if (args.method == "quad") {
        posterior = marginal_dose_quadrature(artifact.result, test, prior, grid, options);
    } else if (args.method == "mc") {
        posterior = marginal_dose_monte_carlo(artifact.result, test, prior, args.draws,
                                              args.seed, grid, options);
    } else {
        std::cerr << "error: --method must be quad or mc\n";
        return 2;
    }

    print_summary(posterior);
    if (!args.density_path.empty()) {
        write_density_csv(args.density_path, posterior);
        std::cout << "density " << args.density_path << "\n";
    }
    return 0;
}

struct SimulateArgs {
    std::string params_path;
    std::string design_path;
    std::uint64_t seed = env_seed_default();
    std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
    const MixtureParams params = load_params_or_artifact(args.params_path);
    std::vector<DesignPoint> design = read_design_csv(args.design_path);
    std::vector<DesignPoint> active;
    for (const DesignPoint& point : design) {
        if (point.cells == 0) {
            std::cout << "warning skipping design point d=" << point.dose_gy
                      << " t=" << point.time_h << " with 0 cells\n";
            continue;
        }
        active.push_back(point);
    }
    if (active.empty()) throw DomainError("design has no points with cells > 0");
    const CalibrationDataset data =
        sample_synthetic(params, active, args.seed, "simulated");
    write_calibration_csv(args.out_path, data);
    std::cout << "rows " << data.size() << "\n";
    std::cout << "data " << args.out_path << "\n";
    return 0;
}

struct SurfaceArgs {
    std::string calibration_path;
    std::string doses_text;
    std::string times_text;
    std::string out_path;
};

int run_surface(const SurfaceArgs& args) {
    const CalibrationArtifact artifact = CalibrationArtifact::load(args.calibration_path);
    const auto doses = parse_double_list(args.doses_text, "--doses");
    const auto times = parse_double_list(args.times_text, "--times");
    const auto rows = surface_grid(artifact.result, doses, times);
    if (!args.out_path.empty()) {
        write_surface_csv(args.out_path, rows);
        std::cout << "rows " << rows.size() << "\n";
        std::cout << "grid " << args.out_path << "\n";
    } else {
        std::cout << "dose_gy,time_h,mu,sd\n";
        for (const SurfaceRow& row : rows)
            std::cout << format_double(row.dose_gy) << "," << format_double(row.time_h)
                      << "," << format_double(row.mu) << "," << format_double(row.sd)
                      << "\n";
    }
    return 0;
}

int run_oracle(std::uint64_t seed, const std::string& out_path) {
    const auto reports = oracle::run_all(seed);
    std::cout << "check,statistic,threshold,pass,seed,sample_size\n";
    bool all_pass = true;
    for (const auto& r : reports) {
        std::cout << r.check << "," << format_double(r.statistic) << ","
                  << format_double(r.threshold) << "," << (r.pass ? 1 : 0) << ","
                  << r.seed << "," << r.sample_size << "\n";
        all_pass = all_pass && r.pass;
    }
    if (!out_path.empty()) write_oracle_report_csv(out_path, reports);
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dose-time calibration and Bayesian dose estimation from "
                 "foci counts"};
    app.set_version_flag("--version", focidose::kVersion);
    app.require_subcommand(1);

    CalibrateArgs cal;
    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "Fit the mixture response surface and write an artifact");
    calibrate->add_option("data", cal.data_path, "Calibration CSV")->required();
    calibrate->add_option("--k", cal.k, "Number of mixture components");
    calibrate->add_option("--k-sweep", cal.k_sweep, "Range of K to compare, e.g. 2..5");
    calibrate->add_option("--u", cal.u_mode,
                          "Intercept exponent mode: shared, per-k or both");
    calibrate->add_flag_callback(
        "--shared-u", [&cal] { cal.u_mode = "shared"; },
        "Shorthand for --u shared");
    calibrate->add_option("--starts", cal.starts, "Multi-start restarts");
    calibrate->add_option("--seed", cal.seed, "RNG seed (env FOCIDOSE_SEED)");
    calibrate->add_option("--threads", cal.threads,
                          "Worker threads, 0 = all (env FOCIDOSE_THREADS)");
    calibrate->add_option("--max-count", cal.max_count,
                          "Ingestion ceiling on foci per cell");
    calibrate->add_option("--out", cal.out_path, "Artifact output path");

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand(
        "estimate", "Dose posterior for a test sample from an artifact");
    estimate->add_option("--calibration", est.calibration_path, "Calibration artifact")
        ->required();
    estimate->add_option("--mean", est.mean, "Sample mean foci per cell")->required();
    estimate->add_option("--se", est.se, "Standard error of the mean")->required();
    estimate->add_option("--n", est.n, "Number of scored cells");
    estimate
        ->add_option("--time-prior", est.prior_text,
                     "uniform:p,q | beta:alpha,beta,p,q | point:t")
        ->required();
    estimate->add_option("--method", est.method, "quad (default) or mc");
    estimate->add_option("--draws", est.draws, "Monte Carlo draws (>= 10000)");
    estimate->add_option("--seed", est.seed, "RNG seed (env FOCIDOSE_SEED)");
    estimate->add_option("--level", est.level, "Credible level, default 0.95");
    estimate->add_option("--grid", est.grid_text, "Dose grid lo,hi,step in Gy");
    estimate->add_flag("--truncate-nonnegative", est.truncate,
                       "Renormalize the posterior to d >= 0");
    estimate->add_option("--threads", est.threads,
                         "Worker threads, 0 = all (env FOCIDOSE_THREADS)");
    estimate->add_option("--out-density", est.density_path, "Density grid CSV path");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Draw synthetic calibration data from mixture parameters");
    simulate->add_option("--params", sim.params_path,
                         "Parameter file or calibration artifact")
        ->required();
    simulate->add_option("--design", sim.design_path, "Design CSV (dose,time,cells)")
        ->required();
    simulate->add_option("--seed", sim.seed, "RNG seed (env FOCIDOSE_SEED)");
    simulate->add_option("--out", sim.out_path, "Output CSV path")->required();

    SurfaceArgs sur;
    CLI::App* surface = app.add_subcommand(
        "surface", "Export the calibrated mean surface on a dose/time grid");
    surface->add_option("--calibration", sur.calibration_path, "Calibration artifact")
        ->required();
    surface->add_option("--doses", sur.doses_text, "Comma list of doses in Gy")
        ->required();
    surface->add_option("--times", sur.times_text, "Comma list of times in h")
        ->required();
    surface->add_option("--out", sur.out_path, "Grid CSV path");

    std::uint64_t oracle_seed = env_seed_default();
    std::string oracle_out;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "Independent verification battery");
    CLI::App* oracle_run =
        oracle_cmd->add_subcommand("run-all", "Run every oracle check");
    oracle_run->add_option("--seed", oracle_seed, "RNG seed (env FOCIDOSE_SEED)");
    oracle_run->add_option("--out", oracle_out, "Report CSV path");
    oracle_cmd->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*calibrate) return run_calibrate(cal);
        if (*estimate) return run_estimate(est);
        if (*simulate) return run_simulate(sim);
        if (*surface) return run_surface(sur);
        if (*oracle_cmd) return run_oracle(oracle_seed, oracle_out);
    } catch (const focidose::FociDoseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
