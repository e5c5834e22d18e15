#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trine/benchmark.hpp"
#include "trine/estimator.hpp"
#include "trine/simulate.hpp"
#include "trine/theory.hpp"

namespace trine::io {

// 17 significant digits, enough to reproduce any double exactly.
std::string format_full(double v);
// 4 significant digits for human-facing tables.
std::string format_table(double v);

std::string scenario_to_json(const simulate::BenchmarkScenario& s);
simulate::BenchmarkScenario scenario_from_json(const std::string& text);
simulate::BenchmarkScenario read_scenario_file(const std::filesystem::path& path);

// Dataset CSV columns: traj,k,time,y*[,sd*][,x*][,inc*]. Increment cells are
// empty on the last row of each trajectory. A JSON sidecar with the scenario,
// seed, and realized ratio is written next to the CSV (same name, .json).
void write_dataset(const std::filesystem::path& csv_path, const simulate::ScenarioRun& run);

struct LoadedDataset {
    std::vector<simulate::SimulatedBundle> bundles;
    bool has_truth = false;
    bool has_increments = false;
    bool has_noise_sd = false;
    std::optional<simulate::BenchmarkScenario> scenario;
    std::uint64_t seed = 0;
    double realized_ratio = 0.0;
};

// Reads a dataset CSV; the sidecar (explicit path, or CSV path with .json
// extension if present) supplies delta_t, kind, and the scenario.
LoadedDataset read_dataset(const std::filesystem::path& csv_path,
                           const std::optional<std::filesystem::path>& sidecar = {});

void write_profile(const std::filesystem::path& path, const estimator::SdProfile& profile);

void write_vector_csv(const std::filesystem::path& path, const std::string& column,
                      const Eigen::VectorXd& v);

// Fitted hyperparameters, evidence values, seed, and diagnostics for one
// estimator run on one coordinate.
void write_estimate_metadata(const std::filesystem::path& path,
                             const estimator::TrineOutput& out, BetaFamily family,
                             std::uint64_t seed, std::optional<double> fit);

void write_results(const std::filesystem::path& path,
                   const std::vector<benchmark::FitResult>& results);

void write_manifest(const std::filesystem::path& path,
                    const simulate::BenchmarkScenario& scenario, std::uint64_t base_seed,
                    int runs, const std::vector<std::string>& estimators, int failures,
                    const std::vector<benchmark::RunFailure>& failure_log = {});

void write_summary(const std::filesystem::path& path,
                   const std::vector<benchmark::Summary>& rows);

void write_bins(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, benchmark::BinStat>>& rows);

void write_theory(const std::filesystem::path& path,
                  const std::vector<theory::RCurvePoint>& points,
                  const std::vector<double>* empirical = nullptr);

}  // namespace trine::io
