#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trine/estimator.hpp"
#include "trine/simulate.hpp"

namespace trine::benchmark {

struct FitResult {
    int run_index = 0;
    std::string system;
    std::string estimator;
    double ratio = 0.0;  // realized measurement-to-intrinsic noise ratio
    double fit = 0.0;    // percent, <= 100, can be negative
    std::uint64_t seed = 0;
    double runtime_sec = 0.0;  // informational; excluded from machine outputs
};

// 100 * (1 - ||truth - estimate|| / ||truth||). Needs a nonzero truth.
double fit_metric(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

struct McOptions {
    int runs = 100;
    std::uint64_t base_seed = 1;
    int threads = 1;
    int coordinate = 0;
    std::vector<estimator::EstimatorKind> estimators{
        estimator::EstimatorKind::Oracle, estimator::EstimatorKind::Trine,
        estimator::EstimatorKind::TrineUnstructured};
    estimator::TrineConfig config;       // beta family is taken from the scenario
    double max_failure_fraction = 0.1;   // beyond this the harness aborts
};

struct RunFailure {
    int run_index = 0;
    std::uint64_t seed = 0;  // replaying this seed reproduces the failure
    std::string message;
};

struct McReport {
    std::vector<FitResult> results;  // sorted by (run, estimator order)
    int failures = 0;
    std::vector<RunFailure> failure_log;
};

// Runs the scenario `runs` times with seed = base_seed xor run index; all
// estimators in one run share the same simulated dataset, and the two Trine
// variants share the stage-1 solve. Results are collected by run index so the
// output is identical for any thread count. Individual run failures are
// recorded and skipped unless they exceed max_failure_fraction.
McReport run_monte_carlo(const simulate::BenchmarkScenario& scenario, const McOptions& opt);

struct BinStat {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
    double mean_fit = 0.0;
};

// Mean fit of one estimator in ratio bins [e0,e1), ..., [e_{m-2}, e_{m-1}];
// the last bin includes its upper edge. Results outside the edges land in an
// overflow count (reported through `overflow` when given) so no run vanishes
// silently.
std::vector<BinStat> bin_by_ratio(const std::vector<FitResult>& results,
                                  const std::vector<double>& edges,
                                  const std::string& estimator, int* overflow = nullptr);

// Ratio bin edges used in the noise sweep tables.
std::vector<double> sweep_bin_edges();

struct Summary {
    std::string system;
    std::string estimator;
    int count = 0;
    double mean_fit = 0.0;
    double sd_fit = 0.0;  // sample SD; zero for a single result
    // quartiles by linear interpolation between order statistics (h = (n-1)p)
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
};

std::vector<Summary> summarize(const std::vector<FitResult>& results);

}  // namespace trine::benchmark
