// Acceptance gate for the shipped library and tool. Each criterion prints
// exactly one "criterion N: PASS/FAIL" line (details above it) and the binary
// exits nonzero if any requested criterion fails.
//
//   acceptance [--only N]
//
// The checks drive the public library API plus the installed command line
// binary; tolerances and reference values are pinned here on purpose.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "trine/benchmark.hpp"
#include "trine/estimator.hpp"
#include "trine/io.hpp"
#include "trine/kernels.hpp"
#include "trine/rng.hpp"
#include "trine/simulate.hpp"
#include "trine/theory.hpp"

namespace fs = std::filesystem;
using namespace trine;

namespace {

// ---- pinned tolerances and reference values ----
constexpr double kStageRelTol = 1e-8;      // criterion 1: closed form vs minimizer
constexpr double kPsdFloor = -1e-10;       // criterion 2: min eig >= kPsdFloor * trace/n
constexpr double kAreTol = 1e-10;          // criterion 3: steady-state equation residual
constexpr double kFactoredTol = 1e-8;      //   and its factorized form
constexpr double kKalmanRelTol = 0.03;     //   filter simulation vs closed form
constexpr double kTableTol = 6.0;          // criterion 4: |mean fit - reference|
constexpr double kOrderSlack = 2.0;        //   oracle >= trine >= trine_u slack
constexpr double kTrendSlack = 1.0;        // criterion 5: per-step non-increase slack
constexpr double kBinGap = 2.0;            //   required trine/trine_u separation
constexpr double kOuVarTol = 0.05;         // criterion 6: stationary variance
constexpr double kMinSelfPromoterFit = 75.0;  // criterion 7

struct ReferenceRow {
    const char* system;
    double oracle;
    double trine;
    double trine_u;
};
// Reference mean fits for the standard benchmark configurations; a run is
// accepted within +-kTableTol points per estimator.
constexpr ReferenceRow kReferenceTable[] = {
    {"ricker", 93.6, 91.1, 82.2},
    {"self_promoter", 88.1, 87.2, 78.1},
    {"toggle", 92.2, 89.1, 72.6},
    {"fhn", 91.6, 90.3, 79.3},
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double sec() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void detail(const std::string& line) { std::cout << "  " << line << "\n"; }

std::string num(double v) { return io::format_table(v); }

double log_uniform(Rng& rng, double lo, double hi) {
    return lo * std::pow(hi / lo, rng.uniform());
}

double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-12);
}

int worker_threads() {
    if (const char* env = std::getenv("TRINE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& scratch) {
    const std::string cmd = std::string(TRINE_CLI_PATH) + " " + args + " > " +
                            (scratch / "stdout.txt").string() + " 2> " +
                            (scratch / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "trine_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---- criterion 1: closed forms vs brute-force quadratic minimizers ----

bool criterion1() {
    Timer timer;
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = 5 + i % 26;
        const int dim = 1 + i % 2;

        estimator::TrainingSet ts;
        ts.inputs.resize(n, dim);
        for (int r = 0; r < n; ++r)
            for (int d = 0; d < dim; ++d) ts.inputs(r, d) = 3.0 * rng.uniform();
        ts.outputs.resize(n);
        for (int r = 0; r < n; ++r) ts.outputs[r] = rng.gaussian();
        ts.noise_var.resize(n);
        for (int r = 0; r < n; ++r) ts.noise_var[r] = 0.01 + 0.3 * rng.uniform();
        ts.delta_t = 0.1;
        ts.kind = DynamicsKind::Continuous;

        estimator::TrineConfig cfg;
        cfg.mean_mode = estimator::MeanTermMode::Off;
        cfg.beta_family = static_cast<BetaFamily>(i % 3);
        cfg.lambda_f = log_uniform(rng, 0.3, 3.0);
        cfg.ell_f = log_uniform(rng, 0.3, 3.0);
        cfg.rho_n = log_uniform(rng, 0.3, 3.0);
        cfg.lambda_w = log_uniform(rng, 0.3, 3.0);
        cfg.ell_w = log_uniform(rng, 0.3, 3.0);
        cfg.lambda_g = log_uniform(rng, 0.3, 3.0);
        cfg.ell_g = log_uniform(rng, 0.3, 3.0);
        cfg.rho_g = log_uniform(rng, 0.3, 3.0);
        const double beta = beta_value(cfg.beta_family);

        const Eigen::MatrixXd kf =
            kernels::kernel_matrix({cfg.lambda_f, cfg.ell_f}, ts.inputs);
        Eigen::MatrixXd c1 = kf;
        c1.diagonal() += ts.noise_var;
        c1.diagonal().array() += cfg.rho_n;

        const auto s1 = estimator::stage1_signs(ts, cfg);
        const double kkt1 = (c1 * s1.coeffs - ts.outputs).norm() / ts.outputs.norm();
        const Eigen::MatrixXd white = cfg.rho_n * Eigen::MatrixXd::Identity(n, n);
        const double map1 = rel_err(
            s1.noise_estimate,
            testoracle::map_noise_component(kf, white, ts.noise_var, ts.outputs));

        const auto s2 = estimator::stage2_noise(ts, s1, cfg);
        const Eigen::MatrixXd kgw = kernels::structured_kernel(
            kernels::kernel_matrix({cfg.lambda_w, cfg.ell_w}, ts.inputs), s1.signs, beta);
        Eigen::MatrixXd c2 = kf + kgw;
        c2.diagonal() += ts.noise_var;
        const Eigen::VectorXd w2 = c2.fullPivLu().solve(ts.outputs);
        const double kkt2 = (s2.noise_estimate - kgw * w2).norm() / ts.outputs.norm();
        const double map2 = rel_err(
            s2.noise_estimate,
            testoracle::map_noise_component(kf, kgw, ts.noise_var, ts.outputs));

        const Eigen::VectorXd targets = s2.noise_estimate.cwiseAbs() / beta;
        const auto s3 = estimator::stage3_profile(ts, targets, cfg);
        const Eigen::MatrixXd kg =
            kernels::kernel_matrix({cfg.lambda_g, cfg.ell_g}, ts.inputs);
        Eigen::MatrixXd ridge = kg;
        ridge.diagonal().array() += cfg.rho_g;
        const double kkt3 =
            (ridge * s3.weights - targets).norm() / std::max(targets.norm(), 1e-12);
        const Eigen::VectorXd qp = testoracle::smoothing_qp_minimizer(kg, cfg.rho_g, targets);
        const double map3 = rel_err(kg * s3.weights, kg * qp);
        const double obj_lib = testoracle::smoothing_objective(kg, cfg.rho_g, targets,
                                                               s3.weights);
        const double obj_qp = testoracle::smoothing_objective(kg, cfg.rho_g, targets, qp);
        const double obj_gap = std::abs(obj_lib - obj_qp) / std::max(1.0, obj_qp);

        for (const double e : {kkt1, map1, kkt2, map2, kkt3, map3, obj_gap})
            worst = std::max(worst, e);
        if (worst > kStageRelTol) {
            detail("instance " + std::to_string(i) + " exceeded tolerance: worst error " +
                   num(worst));
            return false;
        }
    }
    const double elapsed = timer.sec();
    detail("100 instances, worst relative error " + num(worst) + ", " + num(elapsed) + " s");
    return worst <= kStageRelTol && elapsed < 60.0;
}

// ---- criterion 2: structured kernel stays positive semidefinite ----

bool criterion2() {
    Timer timer;
    Rng rng(202);
    double worst_scaled = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int n = 2 + i % 39;
        const int dim = 1 + i % 2;
        Eigen::MatrixXd points(n, dim);
        for (int r = 0; r < n; ++r)
            for (int d = 0; d < dim; ++d) points(r, d) = 4.0 * rng.uniform() - 2.0;
        const kernels::GaussianKernelParams params{log_uniform(rng, 1e-2, 1e2),
                                                   log_uniform(rng, 5e-2, 2e1)};
        Eigen::VectorXd raw(n);
        for (int r = 0; r < n; ++r) raw[r] = rng.rademacher();
        const kernels::SignVector signs(raw);
        const double beta = beta_value(static_cast<BetaFamily>(i % 3));

        const Eigen::MatrixXd kgw =
            kernels::structured_kernel(kernels::kernel_matrix(params, points), signs, beta);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kgw);
        const double floor = kPsdFloor * kgw.trace() / n;
        const double scaled = es.eigenvalues().minCoeff() / (kgw.trace() / n);
        worst_scaled = std::min(worst_scaled, scaled);
        if (es.eigenvalues().minCoeff() < floor) {
            detail("draw " + std::to_string(i) + ": min eigenvalue " +
                   num(es.eigenvalues().minCoeff()) + " below " + num(floor));
            return false;
        }
    }
    detail("200 sign patterns, worst scaled min eigenvalue " + num(worst_scaled) + ", " +
           num(timer.sec()) + " s");
    return true;
}

// ---- criterion 3: steady-state theory ----

double are_residual(const theory::TheoryParams& p, double P) {
    return P - (p.a * p.a * P - p.a * p.a * P * P / (P + p.r()) + p.q());
}

// (1 - a^2)(P - beta2 gamma2)(P - P0 + gamma2 + mu^2 + sigma2) + a^2 P^2, an
// equivalent factorization of the steady-state quadratic.
double factored_residual(const theory::TheoryParams& p, double P) {
    const double g2 = p.gamma2 + p.mu * p.mu;
    const double p0 = p.beta2 * g2;
    return (1.0 - p.a * p.a) * (P - p.beta2 * p.gamma2) * (P - p0 + g2 + p.sigma2) +
           p.a * p.a * P * P;
}

bool criterion3() {
    Timer timer;
    Rng rng(303);
    const double beta2s[] = {2.0 / 3.14159265358979323846, 0.5, 1.0};
    double worst_are = 0.0, worst_fact = 0.0;
    for (int i = 0; i < 1000; ++i) {
        theory::TheoryParams p;
        p.a = 0.999 * rng.uniform();
        p.gamma2 = log_uniform(rng, 1e-2, 1e2);
        p.mu = 3.0 * rng.uniform();
        p.sigma2 = log_uniform(rng, 1e-3, 1e3);
        p.beta2 = beta2s[i % 3];

        const double P = theory::riccati_P(p);
        const double are = std::abs(are_residual(p, P)) / std::max(1.0, P);
        const double fact = std::abs(factored_residual(p, P)) / std::max(1.0, P * P);
        const double ratio = theory::mse_ratio(p);
        worst_are = std::max(worst_are, are);
        worst_fact = std::max(worst_fact, fact);
        if (are > kAreTol || fact > kFactoredTol) {
            detail("draw " + std::to_string(i) + ": equation residual " + num(are) +
                   ", factored " + num(fact));
            return false;
        }
        if (!(ratio > 1.0 - p.beta2 - 1e-12) || !(ratio <= 1.0 + 1e-12)) {
            detail("draw " + std::to_string(i) + ": ratio " + num(ratio) +
                   " outside (1 - beta^2, 1]");
            return false;
        }
    }
    detail("1000 draws, worst residuals " + num(worst_are) + " / " + num(worst_fact));

    double worst_gap = 0.0;
    for (const double mu : {0.0, 1.0}) {
        for (const double sigma : {1.0, 10.0}) {
            for (const double a : {0.0, 0.5, 0.9, 0.99}) {
                theory::TheoryParams p;
                p.a = a;
                p.gamma2 = 1.0;
                p.mu = mu;
                p.sigma2 = sigma * sigma;
                p.beta2 = 2.0 / 3.14159265358979323846;
                const double closed = theory::mse_known_signs(p);
                const double emp = theory::kalman_empirical_mse(p, 3000000, 2, 71);
                const double gap = std::abs(emp - closed) / closed;
                worst_gap = std::max(worst_gap, gap);
                if (gap > kKalmanRelTol) {
                    detail("filter gap " + num(gap) + " at a=" + num(a) + " mu=" + num(mu) +
                           " sigma=" + num(sigma));
                    return false;
                }
            }
        }
    }
    const double elapsed = timer.sec();
    detail("16 filter settings, worst relative gap " + num(worst_gap) + ", " + num(elapsed) +
           " s");
    return elapsed < 300.0;
}

// ---- criterion 4: benchmark table ----

bool criterion4() {
    Timer timer;
    bool ok = true;
    for (const auto& row : kReferenceTable) {
        Timer sys_timer;
        auto scenario = simulate::default_scenario(row.system);
        scenario.noise_ratio_range = {0.0, 0.4};
        benchmark::McOptions opt;
        opt.runs = 100;
        opt.base_seed = 1;
        opt.threads = worker_threads();
        const auto report = benchmark::run_monte_carlo(scenario, opt);

        std::map<std::string, double> mean;
        for (const auto& s : benchmark::summarize(report.results)) mean[s.estimator] = s.mean_fit;

        const std::pair<std::string, double> expected[] = {
            {"oracle", row.oracle}, {"trine", row.trine}, {"trine_u", row.trine_u}};
        std::string verdicts;
        bool sys_ok = true;
        for (const auto& [name, ref] : expected) {
            const double got = mean.at(name);
            const bool in_band = std::abs(got - ref) <= kTableTol;
            sys_ok = sys_ok && in_band;
            verdicts += name + " " + num(got) + " (ref " + num(ref) +
                        (in_band ? ", ok) " : ", off) ");
        }
        const bool order = mean.at("oracle") >= mean.at("trine") - kOrderSlack &&
                           mean.at("trine") >= mean.at("trine_u") - kOrderSlack;
        sys_ok = sys_ok && order;
        detail(std::string(row.system) + ": " + verdicts + (order ? "[order ok]" : "[order off]") +
               " " + num(sys_timer.sec()) + " s, failures " + std::to_string(report.failures));
        ok = ok && sys_ok;
    }
    detail("total " + num(timer.sec()) + " s");
    return ok;
}

// ---- criterion 5: toggle noise sweep bins ----

bool criterion5() {
    Timer timer;
    auto scenario = simulate::default_scenario("toggle");
    scenario.noise_ratio_range = {0.0, 1.0};
    benchmark::McOptions opt;
    opt.runs = 200;
    opt.base_seed = 2;
    opt.threads = worker_threads();
    opt.estimators = {estimator::EstimatorKind::Trine,
                      estimator::EstimatorKind::TrineUnstructured};
    const auto report = benchmark::run_monte_carlo(scenario, opt);

    const auto edges = benchmark::sweep_bin_edges();
    const auto trine_bins = benchmark::bin_by_ratio(report.results, edges, "trine");
    const auto u_bins = benchmark::bin_by_ratio(report.results, edges, "trine_u");

    bool ok = true;
    for (std::size_t b = 0; b < trine_bins.size(); ++b) {
        std::ostringstream line;
        line << "[" << num(trine_bins[b].lo) << ", " << num(trine_bins[b].hi)
             << "): trine " << num(trine_bins[b].mean_fit) << " (n=" << trine_bins[b].count
             << "), trine_u " << num(u_bins[b].mean_fit) << " (n=" << u_bins[b].count << ")";
        detail(line.str());
        if (trine_bins[b].count == 0 || u_bins[b].count == 0) {
            detail("empty bin");
            ok = false;
        }
    }
    for (std::size_t b = 0; b + 1 < trine_bins.size(); ++b) {
        if (trine_bins[b + 1].mean_fit > trine_bins[b].mean_fit + kTrendSlack) {
            detail("trine mean rises from bin " + std::to_string(b) + " to " +
                   std::to_string(b + 1));
            ok = false;
        }
    }
    for (std::size_t b = 0; b < 4; ++b) {  // bins below ratio 0.4
        if (!(trine_bins[b].mean_fit > u_bins[b].mean_fit + kBinGap)) {
            detail("trine does not lead by > " + num(kBinGap) + " in bin " + std::to_string(b));
            ok = false;
        }
    }
    const std::size_t last = trine_bins.size() - 1;  // [0.6, 1.0]
    if (!(u_bins[last].mean_fit > trine_bins[last].mean_fit + kBinGap)) {
        detail("trine_u does not lead by > " + num(kBinGap) + " in the top bin");
        ok = false;
    }
    detail("total " + num(timer.sec()) + " s, failures " + std::to_string(report.failures));
    return ok;
}

// ---- criterion 6: simulator fidelity ----

bool check_increment_identity(const simulate::SystemDefinition& sys,
                              const simulate::SimulatedBundle& b) {
    const bool continuous = sys.kind == DynamicsKind::Continuous;
    for (Eigen::Index k = 0; k + 1 < b.states.rows(); ++k) {
        const Eigen::VectorXd x = b.states.row(k).transpose();
        const Eigen::VectorXd det_part =
            continuous ? Eigen::VectorXd(x + b.delta_t * sys.drift(x)) : sys.drift(x);
        const Eigen::VectorXd resid =
            b.states.row(k + 1).transpose() - det_part - b.increments.row(k).transpose();
        if (resid.cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
}

bool criterion6() {
    Timer timer;
    bool ok = true;

    {  // mean-reverting diffusion reaches its stationary variance
        simulate::SystemDefinition ou;
        ou.name = "ou";
        ou.dimension = 1;
        ou.kind = DynamicsKind::Continuous;
        ou.clamp_nonnegative = false;
        ou.initial_state = Eigen::VectorXd::Zero(1);
        ou.drift = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
        ou.diffusion = [](const Eigen::VectorXd&) {
            return Eigen::MatrixXd::Constant(1, 1, 0.7);
        };
        ou.sd_profile = [](const Eigen::VectorXd&) {
            return Eigen::VectorXd::Constant(1, 0.7);
        };
        Rng rng(606);
        const auto raw = simulate::euler_maruyama(ou, ou.initial_state, 0.01, 600000, rng,
                                                  BetaFamily::Gaussian);
        const auto tail = raw.states.col(0).tail(500000);
        const double mean = tail.mean();
        const double var = (tail.array() - mean).square().sum() / (tail.size() - 1);
        const double expected = 0.7 * 0.7 / 2.0;
        const double err = std::abs(var - expected) / expected;
        detail("stationary variance " + num(var) + " vs " + num(expected) + " (rel err " +
               num(err) + ")");
        ok = ok && err < kOuVarTol;
    }

    {  // derived toggle parameters
        const auto [b, kappa] = simulate::toggle_compound_parameters(1e4, 1e3, 50.0, 0.75, 0.01);
        detail("toggle derived parameters " + io::format_full(b) + ", " + io::format_full(kappa));
        ok = ok && std::abs(b - 0.28125) <= 1e-12 && std::abs(kappa - 2.37) <= 0.005;
    }

    {  // default spiking dataset shape
        const auto run = simulate::simulate_scenario(simulate::default_scenario("fhn"), 5);
        const bool shape = run.bundles.size() == 1 && run.bundles[0].states.rows() == 2000 &&
                           std::abs(run.bundles[0].delta_t - 0.1) < 1e-12;
        detail(std::string("spiking dataset: ") + std::to_string(run.bundles[0].states.rows()) +
               " samples, delta_t " + io::format_full(run.bundles[0].delta_t));
        ok = ok && shape;
    }

    {  // increment bookkeeping identity, exact on every run
        for (const std::string name : {"ricker", "self_promoter", "toggle", "fhn"}) {
            auto scenario = simulate::default_scenario(name);
            scenario.num_points = 200;
            const auto run = simulate::simulate_scenario(scenario, 7);
            bool exact = true;
            if (scenario.sampling_stride == 1)
                for (const auto& b : run.bundles)
                    exact = exact && check_increment_identity(run.system, b);
            // The raw chain is checked directly as well (covers strided sampling).
            Rng rng(808);
            const auto raw = simulate::euler_maruyama(run.system, run.system.initial_state,
                                                      scenario.inner_step, 200, rng,
                                                      BetaFamily::Gaussian);
            simulate::SimulatedBundle rb;
            rb.states = raw.states;
            rb.increments = raw.increments;
            rb.delta_t =
                run.system.kind == DynamicsKind::Continuous ? scenario.inner_step : 1.0;
            rb.kind = run.system.kind;
            exact = exact && check_increment_identity(run.system, rb);
            if (!exact) detail(name + ": bookkeeping identity violated");
            ok = ok && exact;
        }
        detail("increment bookkeeping identity exact on all four systems");
    }

    detail("total " + num(timer.sec()) + " s");
    return ok;
}

// ---- criterion 7: self-promoter qualitative signature ----

bool criterion7() {
    Timer timer;
    auto scenario = simulate::default_scenario("self_promoter");
    // output noise held in the published 30..40 percent regime
    scenario.noise_ratio_range = {0.3, 0.4};
    const auto run = simulate::simulate_scenario(scenario, 8);
    const auto ts = simulate::build_dataset(run.bundles, 0);

    estimator::TrineConfig cfg;
    const auto out = estimator::run_trine(ts, cfg);
    const double fit = benchmark::fit_metric(simulate::true_gain_at_inputs(run.system, ts),
                                             out.profile.evaluate_rows(ts.inputs));

    const double lo = ts.inputs.col(0).minCoeff();
    const double hi = ts.inputs.col(0).maxCoeff();
    const int grid_n = 200;
    Eigen::MatrixXd grid(grid_n, 1);
    for (int i = 0; i < grid_n; ++i)
        grid(i, 0) = lo + (hi - lo) * i / static_cast<double>(grid_n - 1);
    const Eigen::VectorXd values = out.profile.evaluate_rows(grid);
    Eigen::Index arg_max = 0;
    values.maxCoeff(&arg_max);

    const bool interior = arg_max > 0 && arg_max < grid_n - 1;
    detail("fit " + num(fit) + "%, profile peak at x = " + num(grid(arg_max, 0)) +
           " inside [" + num(lo) + ", " + num(hi) + "]: " + (interior ? "yes" : "no") + ", " +
           num(timer.sec()) + " s");
    return interior && fit >= kMinSelfPromoterFit;
}

// ---- criterion 8: byte-identical reruns of every subcommand ----

bool criterion8() {
    Timer timer;
    bool ok = true;

    const auto compare = [&](const std::string& label, const fs::path& a, const fs::path& b,
                             const std::vector<std::string>& files) {
        for (const auto& f : files) {
            const std::string ba = slurp(a / f);
            const std::string bb = slurp(b / f);
            if (ba.empty() || ba != bb) {
                detail(label + ": " + f + (ba.empty() ? " missing/empty" : " differs"));
                ok = false;
            }
        }
    };

    {
        const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
        const std::string args = " simulate --system toggle --points 120 --ratio 0.2";
        ok = run_cli("--seed 3 --out " + a.string() + args, a) == 0 && ok;
        ok = run_cli("--seed 3 --out " + b.string() + args, b) == 0 && ok;
        compare("simulate", a, b, {"dataset.csv", "dataset.json"});

        const fs::path ea = fresh_dir("est_a"), eb = fresh_dir("est_b");
        const std::string eargs = " estimate --data " + (a / "dataset.csv").string() +
                                  " --estimator trine --grid 3 --refine 20";
        ok = run_cli("--out " + ea.string() + eargs, ea) == 0 && ok;
        ok = run_cli("--out " + eb.string() + eargs, eb) == 0 && ok;
        compare("estimate", ea, eb,
                {"profile_c0.csv", "estimate_c0.json", "signs_c0.csv", "noise_c0.csv"});
    }

    {
        const fs::path a = fresh_dir("bench_a"), b = fresh_dir("bench_b");
        const std::string args =
            " benchmark --system ricker --points 60 --ratio 0:0.3 --runs 2"
            " --estimators oracle,trine_u --bins";
        ok = run_cli("--seed 4 --out " + a.string() + args, a) == 0 && ok;
        ok = run_cli("--seed 4 --out " + b.string() + args, b) == 0 && ok;
        compare("benchmark", a, b,
                {"results.csv", "manifest.json", "summary.csv", "bins.csv"});
    }

    {
        const fs::path a = fresh_dir("theory_a"), b = fresh_dir("theory_b");
        const std::string args =
            " theory --a-grid 0:0.3:0.1 --sigma 2 --verify --horizon 50000 --replicates 1";
        ok = run_cli("--seed 5 --out " + a.string() + args, a) == 0 && ok;
        ok = run_cli("--seed 5 --out " + b.string() + args, b) == 0 && ok;
        compare("theory", a, b, {"r_curve.csv"});
    }

    detail("total " + num(timer.sec()) + " s");
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only N]\n";
            return 1;
        }
    }

    const std::pair<const char*, std::function<bool()>> criteria[] = {
        {"closed-form stage solutions match brute-force minimizers", criterion1},
        {"structured noise kernel stays positive semidefinite", criterion2},
        {"steady-state theory matches its equation, bounds, and a filter run", criterion3},
        {"benchmark mean fits land on the reference table", criterion4},
        {"toggle noise sweep reproduces the reference bin trends", criterion5},
        {"simulators reproduce fixed quantities and exact bookkeeping", criterion6},
        {"self-promoter profile peaks at intermediate concentrations", criterion7},
        {"every subcommand is byte-deterministic under a fixed seed", criterion8},
    };

    bool all_ok = true;
    for (int id = 1; id <= 8; ++id) {
        if (only != 0 && only != id) continue;
        const auto& [label, fn] = criteria[id - 1];
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            detail(std::string("unexpected error: ") + e.what());
        }
        std::cout << "criterion " << id << ": " << (ok ? "PASS" : "FAIL") << " (" << label
                  << ")\n";
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
