#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trine/benchmark.hpp"
#include "trine/estimator.hpp"
#include "trine/io.hpp"
#include "trine/simulate.hpp"
#include "trine/theory.hpp"

namespace {

namespace fs = std::filesystem;
using namespace trine;

struct GlobalArgs {
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 0;  // 0: environment variable, then 1
};

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("TRINE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

std::array<double, 2> parse_ratio(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        const double v = std::stod(text);
        return {v, v};
    }
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

std::pair<std::string, double> parse_kv(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw InvalidInput("expected key=value, got '" + text + "'");
    return {text.substr(0, eq), std::stod(text.substr(eq + 1))};
}

void apply_fixed(estimator::TrineConfig& cfg, const std::string& key, double value) {
    if (key == "lambda_f") cfg.lambda_f = value;
    else if (key == "ell_f") cfg.ell_f = value;
    else if (key == "rho_n") cfg.rho_n = value;
    else if (key == "lambda_w") cfg.lambda_w = value;
    else if (key == "ell_w") cfg.ell_w = value;
    else if (key == "lambda_g") cfg.lambda_g = value;
    else if (key == "ell_g") cfg.ell_g = value;
    else if (key == "rho_g") cfg.rho_g = value;
    else throw InvalidInput("unknown hyperparameter '" + key + "'");
}

simulate::BenchmarkScenario build_scenario(const std::string& scenario_file,
                                           const std::string& system,
                                           const std::vector<std::string>& params,
                                           const std::string& ratio, int points,
                                           int trajectories, int stride, double dt,
                                           const std::string& family) {
    simulate::BenchmarkScenario scen;
    if (!scenario_file.empty()) {
        scen = io::read_scenario_file(scenario_file);
    } else if (!system.empty()) {
        scen = simulate::default_scenario(system);
    } else {
        throw InvalidInput("either --system or --scenario is required");
    }
    for (const auto& kv : params) {
        const auto [k, v] = parse_kv(kv);
        scen.parameters[k] = v;
    }
    if (!ratio.empty()) scen.noise_ratio_range = parse_ratio(ratio);
    if (points > 0) scen.num_points = points;
    if (trajectories > 0) scen.num_trajectories = trajectories;
    if (stride > 0) scen.sampling_stride = stride;
    if (dt > 0) scen.inner_step = dt;
    if (!family.empty()) scen.beta_family = beta_family_from_string(family);
    return scen;
}

int cmd_simulate(const GlobalArgs& g, const simulate::BenchmarkScenario& scen) {
    const auto run = simulate::simulate_scenario(scen, g.seed);
    const fs::path csv = fs::path(g.out_dir) / "dataset.csv";
    io::write_dataset(csv, run);

    std::cout << "system: " << run.system.name << "\n"
              << "samples: " << scen.num_points << " across " << scen.num_trajectories
              << " trajectories, delta_t = " << io::format_table(run.bundles.front().delta_t)
              << "\n"
              << "realized noise ratio: " << io::format_full(run.realized_ratio) << "\n";
    if (scen.system == "toggle") {
        const auto [b, kappa] = simulate::toggle_compound_parameters(
            scen.parameters.count("theta") ? scen.parameters.at("theta") : 1e4,
            scen.parameters.count("alpha") ? scen.parameters.at("alpha") : 1e3,
            scen.parameters.count("beta") ? scen.parameters.at("beta") : 50.0,
            scen.parameters.count("delta") ? scen.parameters.at("delta") : 0.75,
            scen.parameters.count("K") ? scen.parameters.at("K") : 0.01);
        std::cout << "compound parameters: b = " << io::format_full(b)
                  << ", kappa = " << io::format_full(kappa) << "\n";
    }
    std::cout << "wrote " << csv.string() << " and sidecar\n";
    return 0;
}

int cmd_estimate(const GlobalArgs& g, const std::string& data, const std::string& sidecar,
                 const std::string& estimator_name, int coordinate, bool all_coords,
                 const std::vector<std::string>& fixed, const std::string& mean_term,
                 int grid, int refine, const std::string& family, double delta_t_flag,
                 const std::string& kind_flag) {
    std::optional<fs::path> side;
    if (!sidecar.empty()) side = fs::path(sidecar);
    auto loaded = io::read_dataset(data, side);

    if (delta_t_flag > 0)
        for (auto& b : loaded.bundles) b.delta_t = delta_t_flag;
    if (!kind_flag.empty())
        for (auto& b : loaded.bundles) b.kind = dynamics_kind_from_string(kind_flag);

    estimator::TrineConfig cfg;
    if (!family.empty()) cfg.beta_family = beta_family_from_string(family);
    else if (loaded.scenario) cfg.beta_family = loaded.scenario->beta_family;
    if (grid > 0) cfg.grid_points = grid;
    if (refine >= 0) cfg.refine_max = refine;
    for (const auto& kv : fixed) {
        const auto [k, v] = parse_kv(kv);
        apply_fixed(cfg, k, v);
    }
    if (mean_term == "off") cfg.mean_mode = estimator::MeanTermMode::Off;
    else if (mean_term == "auto") cfg.mean_mode = estimator::MeanTermMode::Auto;
    else if (!mean_term.empty()) {
        cfg.mean_mode = estimator::MeanTermMode::Fixed;
        cfg.mean_value = std::stod(mean_term);
    }

    const auto kind = estimator::estimator_kind_from_string(estimator_name);
    const int dim = static_cast<int>(loaded.bundles.front().observations.cols());
    std::vector<int> coords;
    if (all_coords)
        for (int d = 0; d < dim; ++d) coords.push_back(d);
    else
        coords.push_back(coordinate);

    std::optional<simulate::SystemDefinition> system;
    if (loaded.scenario)
        system = simulate::make_system(loaded.scenario->system, loaded.scenario->parameters);

    for (const int coord : coords) {
        const auto ts = simulate::build_dataset(loaded.bundles, coord);
        estimator::TrineOutput out;
        switch (kind) {
            case estimator::EstimatorKind::Trine: out = estimator::run_trine(ts, cfg); break;
            case estimator::EstimatorKind::TrineUnstructured:
                out = estimator::run_trine_unstructured(ts, cfg);
                break;
            case estimator::EstimatorKind::Oracle: {
                if (!loaded.has_increments)
                    throw InvalidInput(
                        "oracle estimation needs true increments in the dataset");
                out = estimator::run_oracle(
                    ts, simulate::collect_increments(loaded.bundles, coord), cfg);
                break;
            }
        }

        std::optional<double> fit;
        if (system) {
            const Eigen::VectorXd truth = simulate::true_gain_at_inputs(*system, ts);
            fit = benchmark::fit_metric(truth, out.profile.evaluate_rows(ts.inputs));
        }

        const std::string tag = "_c" + std::to_string(coord);
        const fs::path base = fs::path(g.out_dir);
        io::write_profile(base / ("profile" + tag + ".csv"), out.profile);
        io::write_estimate_metadata(base / ("estimate" + tag + ".json"), out,
                                    cfg.beta_family, loaded.seed, fit);
        if (out.stage1) {
            io::write_vector_csv(base / ("signs" + tag + ".csv"), "sign",
                                 out.stage1->signs.vec());
            const Eigen::VectorXd& noise = out.stage2 ? out.stage2->noise_estimate
                                                      : out.stage1->noise_estimate;
            io::write_vector_csv(base / ("noise" + tag + ".csv"), "noise_estimate", noise);
        }

        std::cout << "coordinate " << coord << " [" << estimator::to_string(kind) << "]\n";
        if (out.stage1)
            std::cout << "  stage1: lambda_f = " << io::format_table(out.stage1->kf.amplitude)
                      << ", ell_f = " << io::format_table(out.stage1->kf.squared_width)
                      << ", rho_n = " << io::format_table(out.stage1->rho_n)
                      << ", evidence = " << io::format_table(out.stage1->evidence) << "\n";
        if (out.stage2)
            std::cout << "  stage2: lambda_w = " << io::format_table(out.stage2->kw.amplitude)
                      << ", ell_w = " << io::format_table(out.stage2->kw.squared_width)
                      << ", mu = " << io::format_table(out.stage2->mu)
                      << ", evidence = " << io::format_table(out.stage2->evidence) << "\n";
        std::cout << "  stage3: lambda_g = " << io::format_table(out.stage3.kg.amplitude)
                  << ", ell_g = " << io::format_table(out.stage3.kg.squared_width)
                  << ", rho_g = " << io::format_table(out.stage3.rho_g)
                  << ", evidence = " << io::format_table(out.stage3.evidence) << "\n";
        if (out.diagnostic)
            std::cout << "  noise strength diagnostic: " << io::format_table(*out.diagnostic)
                      << "\n";
        if (fit) std::cout << "  fit: " << io::format_table(*fit) << "%\n";
    }
    return 0;
}

int cmd_benchmark(const GlobalArgs& g, const simulate::BenchmarkScenario& scen, int runs,
                  const std::string& estimators_arg, bool with_bins) {
    benchmark::McOptions opt;
    opt.runs = runs;
    opt.base_seed = g.seed;
    opt.threads = g.threads;
    if (!estimators_arg.empty()) {
        opt.estimators.clear();
        std::string token;
        std::istringstream ss(estimators_arg);
        while (std::getline(ss, token, ','))
            opt.estimators.push_back(estimator::estimator_kind_from_string(token));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto report = benchmark::run_monte_carlo(scen, opt);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path base = fs::path(g.out_dir);
    io::write_results(base / "results.csv", report.results);
    std::vector<std::string> est_names;
    for (const auto k : opt.estimators) est_names.push_back(estimator::to_string(k));
    io::write_manifest(base / "manifest.json", scen, g.seed, runs, est_names, report.failures,
                       report.failure_log);
    const auto summary = benchmark::summarize(report.results);
    io::write_summary(base / "summary.csv", summary);

    std::cout << "system: " << scen.system << ", runs: " << runs
              << ", failures: " << report.failures << "\n";
    for (const auto& s : summary)
        std::cout << "  " << s.estimator << ": mean fit " << io::format_table(s.mean_fit)
                  << " (sd " << io::format_table(s.sd_fit) << ", median "
                  << io::format_table(s.median) << ", quartiles " << io::format_table(s.q25)
                  << ".." << io::format_table(s.q75) << ", n = " << s.count << ")\n";

    if (with_bins) {
        std::vector<std::pair<std::string, benchmark::BinStat>> rows;
        for (const auto& name : est_names)
            for (const auto& b :
                 benchmark::bin_by_ratio(report.results, benchmark::sweep_bin_edges(), name))
                rows.emplace_back(name, b);
        io::write_bins(base / "bins.csv", rows);
        std::cout << "wrote " << (base / "bins.csv").string() << "\n";
    }
    std::cout << "wrote " << (base / "results.csv").string() << " and manifest ("
              << io::format_table(elapsed) << " s)\n";
    return 0;
}

int cmd_theory(const GlobalArgs& g, double gamma, double mu, double sigma,
               const std::string& family, double a_single, const std::string& a_grid,
               bool verify, long horizon, int replicates) {
    const double beta2 = std::pow(beta_value(beta_family_from_string(
                                      family.empty() ? "gaussian" : family)),
                                  2.0);
    std::vector<double> a_values;
    if (a_single >= 0.0) {
        a_values.push_back(a_single);
    } else {
        double lo = 0.0, hi = 0.99, step = 0.01;
        if (!a_grid.empty()) {
            std::istringstream ss(a_grid);
            std::string part;
            std::vector<double> parts;
            while (std::getline(ss, part, ':')) parts.push_back(std::stod(part));
            if (parts.size() != 3) throw InvalidInput("--a-grid expects lo:hi:step");
            lo = parts[0];
            hi = parts[1];
            step = parts[2];
            if (!(step > 0.0)) throw InvalidInput("--a-grid step must be positive");
        }
        for (double a = lo; a <= hi + 1e-12; a += step) a_values.push_back(std::min(a, hi));
    }

    const auto points = theory::r_curve(gamma * gamma, mu, sigma * sigma, beta2, a_values);

    std::optional<std::vector<double>> empirical;
    if (verify) {
        empirical.emplace();
        double max_gap = 0.0;
        for (const auto& pt : points) {
            theory::TheoryParams p{pt.a, gamma * gamma, mu, sigma * sigma, beta2};
            const double emp = theory::kalman_empirical_mse(p, horizon, replicates, g.seed);
            empirical->push_back(emp);
            if (pt.mse_known > 0.0)
                max_gap = std::max(max_gap, std::abs(emp - pt.mse_known) / pt.mse_known);
        }
        std::cout << "max relative gap between empirical and closed-form MSE: "
                  << io::format_table(max_gap) << "\n";
    }

    const fs::path out = fs::path(g.out_dir) / "r_curve.csv";
    io::write_theory(out, points, empirical ? &*empirical : nullptr);
    for (const auto& pt : points)
        if (a_values.size() <= 5)
            std::cout << "a = " << io::format_table(pt.a)
                      << ": mse_unknown = " << io::format_full(pt.mse_unknown)
                      << ", mse_known = " << io::format_full(pt.mse_known)
                      << ", ratio = " << io::format_full(pt.ratio) << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"state-dependent intrinsic noise estimation from noisy time series"};
    app.require_subcommand(1);
    // Lets --seed/--out/--threads appear after the subcommand as well.
    app.fallthrough();

    GlobalArgs g;
    int threads_flag = 0;
    app.add_option("--seed", g.seed, "base random seed")->capture_default_str();
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", threads_flag, "worker threads (default: TRINE_THREADS or 1)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate a benchmark system");
    std::string sim_system, sim_scenario, sim_ratio, sim_family;
    std::vector<std::string> sim_params;
    int sim_points = 0, sim_traj = 0, sim_stride = 0;
    double sim_dt = 0.0;
    sim->add_option("--system", sim_system, "ricker | fhn | self_promoter | toggle");
    sim->add_option("--scenario", sim_scenario, "scenario JSON file");
    sim->add_option("--param", sim_params, "system parameter override key=value");
    sim->add_option("--ratio", sim_ratio, "noise ratio target LO:HI (or a single value)");
    sim->add_option("--points", sim_points, "total samples");
    sim->add_option("--trajectories", sim_traj, "number of trajectories");
    sim->add_option("--stride", sim_stride, "sampling stride in integrator steps");
    sim->add_option("--dt", sim_dt, "integrator step");
    sim->add_option("--family", sim_family, "gaussian | laplacian | bernoulli");

    // estimate
    auto* est = app.add_subcommand("estimate", "fit a noise profile to a dataset");
    std::string est_data, est_sidecar, est_name = "trine", est_mean, est_family, est_kind;
    std::vector<std::string> est_fixed;
    int est_coord = 0, est_grid = 0, est_refine = -1;
    double est_dt = 0.0;
    bool est_all = false;
    est->add_option("--data", est_data, "dataset CSV")->required();
    est->add_option("--sidecar", est_sidecar, "sidecar JSON (default: dataset with .json)");
    est->add_option("--estimator", est_name, "trine | trine_u | oracle")
        ->capture_default_str();
    est->add_option("--coordinate", est_coord, "state coordinate to estimate");
    est->add_flag("--all-coordinates", est_all, "estimate every coordinate");
    est->add_option("--fix", est_fixed, "pin a hyperparameter, e.g. ell_f=0.5");
    est->add_option("--mean-term", est_mean, "off | auto | <value>");
    est->add_option("--grid", est_grid, "grid points per axis");
    est->add_option("--refine", est_refine, "max refinement evaluations");
    est->add_option("--family", est_family, "gaussian | laplacian | bernoulli");
    est->add_option("--delta-t", est_dt, "sampling interval when no sidecar is present");
    est->add_option("--kind", est_kind, "continuous | discrete_map");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Monte Carlo fit comparison");
    std::string b_system, b_scenario, b_ratio, b_family, b_estimators;
    std::vector<std::string> b_params;
    int b_points = 0, b_traj = 0, b_stride = 0, b_runs = 100;
    double b_dt = 0.0;
    bool b_bins = false;
    bench->add_option("--system", b_system, "ricker | fhn | self_promoter | toggle");
    bench->add_option("--scenario", b_scenario, "scenario JSON file");
    bench->add_option("--param", b_params, "system parameter override key=value");
    bench->add_option("--ratio", b_ratio, "noise ratio range LO:HI");
    bench->add_option("--points", b_points, "total samples per run");
    bench->add_option("--trajectories", b_traj, "number of trajectories");
    bench->add_option("--stride", b_stride, "sampling stride");
    bench->add_option("--dt", b_dt, "integrator step");
    bench->add_option("--family", b_family, "gaussian | laplacian | bernoulli");
    bench->add_option("--runs", b_runs, "Monte Carlo runs")->capture_default_str();
    bench->add_option("--estimators", b_estimators, "comma list: oracle,trine,trine_u");
    bench->add_flag("--bins", b_bins, "also write per-ratio-bin means");

    // theory
    auto* th = app.add_subcommand("theory", "closed-form MSE of the surrogate model");
    double t_gamma = 1.0, t_mu = 0.0, t_sigma = 1.0, t_a = -1.0;
    std::string t_family = "gaussian", t_agrid;
    bool t_verify = false;
    long t_horizon = 2000000;
    int t_reps = 1;
    th->add_option("--gamma", t_gamma, "latent gain SD")->capture_default_str();
    th->add_option("--mu", t_mu, "gain mean offset")->capture_default_str();
    th->add_option("--sigma", t_sigma, "output noise SD")->capture_default_str();
    th->add_option("--family", t_family, "gaussian | laplacian | bernoulli")
        ->capture_default_str();
    th->add_option("--a", t_a, "single autocorrelation value");
    th->add_option("--a-grid", t_agrid, "autocorrelation grid lo:hi:step (default 0:0.99:0.01)");
    th->add_flag("--verify", t_verify, "check the closed form against a filter simulation");
    th->add_option("--horizon", t_horizon, "steps per verification run")->capture_default_str();
    th->add_option("--replicates", t_reps, "verification replicates")->capture_default_str();

    try {
        app.parse(argc, argv);
        g.threads = resolve_threads(threads_flag);

        if (sim->parsed()) {
            return cmd_simulate(g, build_scenario(sim_scenario, sim_system, sim_params,
                                                  sim_ratio, sim_points, sim_traj, sim_stride,
                                                  sim_dt, sim_family));
        }
        if (est->parsed()) {
            return cmd_estimate(g, est_data, est_sidecar, est_name, est_coord, est_all,
                                est_fixed, est_mean, est_grid, est_refine, est_family, est_dt,
                                est_kind);
        }
        if (bench->parsed()) {
            return cmd_benchmark(g, build_scenario(b_scenario, b_system, b_params, b_ratio,
                                                   b_points, b_traj, b_stride, b_dt, b_family),
                                 b_runs, b_estimators, b_bins);
        }
        if (th->parsed()) {
            return cmd_theory(g, t_gamma, t_mu, t_sigma, t_family, t_a, t_agrid, t_verify,
                              t_horizon, t_reps);
        }
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const OptimizationFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SimulationDiverged& e) {
        std::cerr << "error: " << e.what() << " (step " << e.step << ")\n";
        return 2;
    } catch (const ModelEvaluationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
