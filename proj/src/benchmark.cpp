#include "trine/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

namespace trine::benchmark {

namespace {

double elapsed_sec(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RunOutcome {
    std::vector<FitResult> results;
    bool failed = false;
    std::string message;
};

RunOutcome execute_run(const simulate::BenchmarkScenario& scenario, const McOptions& opt,
                       int run_index) {
    RunOutcome out;
    try {
        const std::uint64_t seed = opt.base_seed ^ static_cast<std::uint64_t>(run_index);
        const auto run = simulate::simulate_scenario(scenario, seed);
        const auto ts = simulate::build_dataset(run.bundles, opt.coordinate);
        const Eigen::VectorXd truth = simulate::true_gain_at_inputs(run.system, ts);

        estimator::TrineConfig cfg = opt.config;
        cfg.beta_family = scenario.beta_family;

        const bool want_trine =
            std::count(opt.estimators.begin(), opt.estimators.end(),
                       estimator::EstimatorKind::Trine) > 0;
        const bool want_u =
            std::count(opt.estimators.begin(), opt.estimators.end(),
                       estimator::EstimatorKind::TrineUnstructured) > 0;

        // The stage-1 solve is shared between the two Trine variants.
        std::optional<estimator::Stage1Result> s1;
        double s1_time = 0.0;
        if (want_trine || want_u) {
            const auto t0 = std::chrono::steady_clock::now();
            s1 = estimator::stage1_signs(ts, cfg);
            s1_time = elapsed_sec(t0);
        }

        const double beta = beta_value(cfg.beta_family);
        for (const auto kind : opt.estimators) {
            const auto t0 = std::chrono::steady_clock::now();
            estimator::SdProfile profile;
            switch (kind) {
                case estimator::EstimatorKind::Trine: {
                    const auto s2 = estimator::stage2_noise(ts, *s1, cfg);
                    const auto s3 = estimator::stage3_profile(
                        ts, (s2.noise_estimate.cwiseAbs() / beta).eval(), cfg);
                    profile = estimator::make_profile(ts, s3);
                    break;
                }
                case estimator::EstimatorKind::TrineUnstructured: {
                    const auto s3 = estimator::stage3_profile(
                        ts, (s1->noise_estimate.cwiseAbs() / beta).eval(), cfg);
                    profile = estimator::make_profile(ts, s3);
                    break;
                }
                case estimator::EstimatorKind::Oracle: {
                    const Eigen::VectorXd noise =
                        simulate::collect_increments(run.bundles, opt.coordinate);
                    const auto s3 =
                        estimator::stage3_profile(ts, (noise.cwiseAbs() / beta).eval(), cfg);
                    profile = estimator::make_profile(ts, s3);
                    break;
                }
            }
            FitResult fr;
            fr.run_index = run_index;
            fr.system = scenario.system;
            fr.estimator = estimator::to_string(kind);
            fr.ratio = run.realized_ratio;
            fr.fit = fit_metric(truth, profile.evaluate_rows(ts.inputs));
            fr.seed = seed;
            fr.runtime_sec = elapsed_sec(t0);
            if (kind != estimator::EstimatorKind::Oracle) fr.runtime_sec += s1_time;
            out.results.push_back(std::move(fr));
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.message = e.what();
        out.results.clear();
    }
    return out;
}

}  // namespace

double fit_metric(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
    if (truth.size() != estimate.size()) throw InvalidInput("fit inputs have mismatched sizes");
    const double denom = truth.norm();
    if (!(denom > 0.0)) throw InvalidInput("fit metric undefined for an all-zero truth");
    return 100.0 * (1.0 - (truth - estimate).norm() / denom);
}

McReport run_monte_carlo(const simulate::BenchmarkScenario& scenario, const McOptions& opt) {
    if (opt.runs < 1) throw InvalidInput("need at least one run");
    if (opt.estimators.empty()) throw InvalidInput("no estimators requested");

    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(opt.runs));
    const int threads = std::max(1, opt.threads);

    if (threads == 1) {
        for (int r = 0; r < opt.runs; ++r) outcomes[static_cast<std::size_t>(r)] =
            execute_run(scenario, opt, r);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            while (true) {
                const int r = next.fetch_add(1);
                if (r >= opt.runs) break;
                outcomes[static_cast<std::size_t>(r)] = execute_run(scenario, opt, r);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    McReport report;
    for (int r = 0; r < opt.runs; ++r) {
        auto& oc = outcomes[static_cast<std::size_t>(r)];
        if (oc.failed) {
            ++report.failures;
            report.failure_log.push_back(
                {r, opt.base_seed ^ static_cast<std::uint64_t>(r), oc.message});
        } else {
            for (auto& fr : oc.results) report.results.push_back(std::move(fr));
        }
    }

    if (report.failures > opt.max_failure_fraction * opt.runs)
        throw NumericalFailure("Monte Carlo failure rate exceeded " +
                               std::to_string(opt.max_failure_fraction) + ": " +
                               std::to_string(report.failures) + "/" +
                               std::to_string(opt.runs) + " runs failed");
    return report;
}

std::vector<BinStat> bin_by_ratio(const std::vector<FitResult>& results,
                                  const std::vector<double>& edges,
                                  const std::string& estimator, int* overflow) {
    if (edges.size() < 2) throw InvalidInput("need at least two bin edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw InvalidInput("bin edges must be increasing");

    std::vector<BinStat> bins(edges.size() - 1);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].lo = edges[b];
        bins[b].hi = edges[b + 1];
    }
    if (overflow) *overflow = 0;
    for (const auto& fr : results) {
        if (fr.estimator != estimator) continue;
        bool placed = false;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const bool last = b + 1 == bins.size();
            if (fr.ratio >= bins[b].lo && (fr.ratio < bins[b].hi || (last && fr.ratio == bins[b].hi))) {
                bins[b].mean_fit += fr.fit;
                ++bins[b].count;
                placed = true;
                break;
            }
        }
        if (!placed && overflow) ++(*overflow);
    }
    for (auto& b : bins)
        if (b.count > 0) b.mean_fit /= b.count;
    return bins;
}

std::vector<double> sweep_bin_edges() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 1.0}; }

namespace {

// h = (n-1)p quantile of an already sorted sample
double sorted_quantile(const std::vector<double>& v, double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 == v.size()) return v[lo];
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace

std::vector<Summary> summarize(const std::vector<FitResult>& results) {
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& fr : results) groups[{fr.system, fr.estimator}].push_back(fr.fit);

    std::vector<Summary> out;
    for (auto& [key, fits] : groups) {
        Summary s;
        s.system = key.first;
        s.estimator = key.second;
        s.count = static_cast<int>(fits.size());
        double mean = 0.0;
        for (const double f : fits) mean += f;
        mean /= static_cast<double>(fits.size());
        double ss = 0.0;
        for (const double f : fits) ss += (f - mean) * (f - mean);
        s.mean_fit = mean;
        s.sd_fit = fits.size() > 1 ? std::sqrt(ss / static_cast<double>(fits.size() - 1)) : 0.0;
        std::sort(fits.begin(), fits.end());
        s.q25 = sorted_quantile(fits, 0.25);
        s.median = sorted_quantile(fits, 0.5);
        s.q75 = sorted_quantile(fits, 0.75);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace trine::benchmark
