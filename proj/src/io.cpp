#include "trine/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace trine::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    return f;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad number '" + s + "' in " + context);
    }
}

json scenario_json(const simulate::BenchmarkScenario& s) {
    json j;
    j["system"] = s.system;
    j["parameters"] = json::object();
    for (const auto& [k, v] : s.parameters) j["parameters"][k] = v;
    j["inner_step"] = s.inner_step;
    j["sampling_stride"] = s.sampling_stride;
    j["num_points"] = s.num_points;
    j["num_trajectories"] = s.num_trajectories;
    j["noise_ratio_range"] = {s.noise_ratio_range[0], s.noise_ratio_range[1]};
    j["beta_family"] = to_string(s.beta_family);
    return j;
}

simulate::BenchmarkScenario scenario_from(const json& j) {
    simulate::BenchmarkScenario s;
    try {
        s.system = j.at("system").get<std::string>();
        if (j.contains("parameters"))
            for (const auto& [k, v] : j.at("parameters").items())
                s.parameters[k] = v.get<double>();
        if (j.contains("inner_step")) s.inner_step = j.at("inner_step").get<double>();
        if (j.contains("sampling_stride")) s.sampling_stride = j.at("sampling_stride").get<int>();
        if (j.contains("num_points")) s.num_points = j.at("num_points").get<int>();
        if (j.contains("num_trajectories"))
            s.num_trajectories = j.at("num_trajectories").get<int>();
        if (j.contains("noise_ratio_range")) {
            s.noise_ratio_range[0] = j.at("noise_ratio_range").at(0).get<double>();
            s.noise_ratio_range[1] = j.at("noise_ratio_range").at(1).get<double>();
        }
        if (j.contains("beta_family"))
            s.beta_family = beta_family_from_string(j.at("beta_family").get<std::string>());
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed scenario: ") + e.what());
    }
    return s;
}

}  // namespace

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_table(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string scenario_to_json(const simulate::BenchmarkScenario& s) {
    return scenario_json(s).dump(2) + "\n";
}

simulate::BenchmarkScenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid JSON: ") + e.what());
    }
    return scenario_from(j);
}

simulate::BenchmarkScenario read_scenario_file(const std::filesystem::path& path) {
    return scenario_from_json(read_text(path));
}

void write_dataset(const std::filesystem::path& csv_path, const simulate::ScenarioRun& run) {
    const int dim = run.system.dimension;
    auto f = open_out(csv_path);

    f << "traj,k,time";
    for (int d = 0; d < dim; ++d) f << ",y" << d;
    for (int d = 0; d < dim; ++d) f << ",sd" << d;
    for (int d = 0; d < dim; ++d) f << ",x" << d;
    for (int d = 0; d < dim; ++d) f << ",inc" << d;
    f << "\n";

    for (std::size_t t = 0; t < run.bundles.size(); ++t) {
        const auto& b = run.bundles[t];
        for (Eigen::Index k = 0; k < b.states.rows(); ++k) {
            f << t << ',' << k << ',' << format_full(b.times[k]);
            for (int d = 0; d < dim; ++d) f << ',' << format_full(b.observations(k, d));
            for (int d = 0; d < dim; ++d) f << ',' << format_full(b.noise_sd(k, d));
            for (int d = 0; d < dim; ++d) f << ',' << format_full(b.states(k, d));
            for (int d = 0; d < dim; ++d) {
                f << ',';
                if (k + 1 < b.states.rows()) f << format_full(b.increments(k, d));
            }
            f << "\n";
        }
    }
    f.flush();
    if (!f) throw IoError("write failed: " + csv_path.string());

    json side;
    side["scenario"] = scenario_json(run.scenario);
    side["seed"] = run.seed;
    side["realized_ratio"] = run.realized_ratio;
    side["delta_t"] = run.bundles.empty() ? 1.0 : run.bundles.front().delta_t;
    side["kind"] = to_string(run.bundles.empty() ? DynamicsKind::Continuous
                                                 : run.bundles.front().kind);
    if (run.scenario.system == "toggle") {
        const auto [b, kappa] = simulate::toggle_compound_parameters(
            run.scenario.parameters.count("theta") ? run.scenario.parameters.at("theta") : 1e4,
            run.scenario.parameters.count("alpha") ? run.scenario.parameters.at("alpha") : 1e3,
            run.scenario.parameters.count("beta") ? run.scenario.parameters.at("beta") : 50.0,
            run.scenario.parameters.count("delta") ? run.scenario.parameters.at("delta") : 0.75,
            run.scenario.parameters.count("K") ? run.scenario.parameters.at("K") : 0.01);
        side["derived"]["b"] = b;
        side["derived"]["kappa"] = kappa;
    }
    std::filesystem::path side_path = csv_path;
    side_path.replace_extension(".json");
    auto sf = open_out(side_path);
    sf << side.dump(2) << "\n";
    sf.flush();
    if (!sf) throw IoError("write failed: " + side_path.string());
}

LoadedDataset read_dataset(const std::filesystem::path& csv_path,
                           const std::optional<std::filesystem::path>& sidecar) {
    const std::string text = read_text(csv_path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset: " + csv_path.string());

    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    if (!col.count("traj") || !col.count("y0"))
        throw IoError("dataset header needs at least traj and y0 columns");

    int dim = 0;
    while (col.count("y" + std::to_string(dim))) ++dim;

    LoadedDataset out;
    out.has_noise_sd = col.count("sd0") > 0;
    out.has_truth = col.count("x0") > 0;
    out.has_increments = col.count("inc0") > 0;

    struct Row {
        long traj;
        double time;
        std::vector<double> y, sd, x, inc;
        bool has_inc;
    };
    std::vector<Row> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string ctx = csv_path.string() + ":" + std::to_string(lineno);
        if (cells.size() != header.size()) throw IoError("wrong column count at " + ctx);
        Row r;
        r.traj = static_cast<long>(parse_double(cells[col.at("traj")], ctx));
        r.time = col.count("time") ? parse_double(cells[col.at("time")], ctx) : 0.0;
        r.has_inc = false;
        for (int d = 0; d < dim; ++d) {
            r.y.push_back(parse_double(cells[col.at("y" + std::to_string(d))], ctx));
            if (out.has_noise_sd)
                r.sd.push_back(parse_double(cells[col.at("sd" + std::to_string(d))], ctx));
            if (out.has_truth)
                r.x.push_back(parse_double(cells[col.at("x" + std::to_string(d))], ctx));
            if (out.has_increments) {
                const auto& cell = cells[col.at("inc" + std::to_string(d))];
                if (!cell.empty()) {
                    r.inc.push_back(parse_double(cell, ctx));
                    r.has_inc = true;
                }
            }
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw IoError("dataset has no data rows: " + csv_path.string());

    double delta_t = 1.0;
    DynamicsKind kind = DynamicsKind::Continuous;
    std::filesystem::path side_path;
    if (sidecar) {
        side_path = *sidecar;
    } else {
        side_path = csv_path;
        side_path.replace_extension(".json");
        if (!std::filesystem::exists(side_path)) side_path.clear();
    }
    if (!side_path.empty()) {
        json j;
        try {
            j = json::parse(read_text(side_path));
        } catch (const json::exception& e) {
            throw IoError(std::string("invalid sidecar JSON: ") + e.what());
        }
        try {
            if (j.contains("scenario")) out.scenario = scenario_from(j.at("scenario"));
            if (j.contains("seed")) out.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("realized_ratio"))
                out.realized_ratio = j.at("realized_ratio").get<double>();
            if (j.contains("delta_t")) delta_t = j.at("delta_t").get<double>();
            if (j.contains("kind"))
                kind = dynamics_kind_from_string(j.at("kind").get<std::string>());
        } catch (const json::exception& e) {
            throw IoError(std::string("malformed sidecar: ") + e.what());
        }
    }

    // Rows are grouped by trajectory id in file order.
    std::map<long, std::vector<const Row*>> groups;
    for (const auto& r : rows) groups[r.traj].push_back(&r);

    for (const auto& [traj, group] : groups) {
        const auto n = static_cast<Eigen::Index>(group.size());
        simulate::SimulatedBundle b;
        b.delta_t = delta_t;
        b.kind = kind;
        b.states.resize(n, dim);
        b.observations.resize(n, dim);
        b.noise_sd = Eigen::MatrixXd::Zero(n, dim);
        b.increments = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(n - 1, 0), dim);
        b.times.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const Row& r = *group[static_cast<std::size_t>(k)];
            b.times[k] = r.time;
            for (int d = 0; d < dim; ++d) {
                b.observations(k, d) = r.y[static_cast<std::size_t>(d)];
                b.states(k, d) =
                    out.has_truth ? r.x[static_cast<std::size_t>(d)] : r.y[static_cast<std::size_t>(d)];
                if (out.has_noise_sd) b.noise_sd(k, d) = r.sd[static_cast<std::size_t>(d)];
                if (out.has_increments && k + 1 < n) {
                    if (!r.has_inc)
                        throw IoError("missing increment on a non-final row of trajectory " +
                                      std::to_string(traj));
                    b.increments(k, d) = r.inc[static_cast<std::size_t>(d)];
                }
            }
        }
        out.bundles.push_back(std::move(b));
    }
    return out;
}

void write_profile(const std::filesystem::path& path, const estimator::SdProfile& profile) {
    auto f = open_out(path);
    const int dim = static_cast<int>(profile.centers.cols());
    for (int d = 0; d < dim; ++d) f << "c" << d << ',';
    f << "weight,G_hat\n";
    const Eigen::VectorXd values = profile.evaluate_rows(profile.centers);
    for (Eigen::Index k = 0; k < profile.centers.rows(); ++k) {
        for (int d = 0; d < dim; ++d) f << format_full(profile.centers(k, d)) << ',';
        f << format_full(profile.weights[k]) << ',' << format_full(values[k]) << "\n";
    }
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_vector_csv(const std::filesystem::path& path, const std::string& column,
                      const Eigen::VectorXd& v) {
    auto f = open_out(path);
    f << "k," << column << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) f << i << ',' << format_full(v[i]) << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_estimate_metadata(const std::filesystem::path& path,
                             const estimator::TrineOutput& out, BetaFamily family,
                             std::uint64_t seed, std::optional<double> fit) {
    json j;
    j["estimator"] = estimator::to_string(out.estimator);
    j["beta_family"] = to_string(family);
    j["beta"] = beta_value(family);
    j["delta_t"] = out.profile.delta_t;
    j["kind"] = to_string(out.profile.kind);
    j["seed"] = seed;
    if (out.stage1) {
        j["stage1"]["lambda_f"] = out.stage1->kf.amplitude;
        j["stage1"]["ell_f"] = out.stage1->kf.squared_width;
        j["stage1"]["rho_n"] = out.stage1->rho_n;
        j["stage1"]["evidence"] = out.stage1->evidence;
        j["stage1"]["evaluations"] = out.stage1->evaluations;
    }
    if (out.stage2) {
        j["stage2"]["lambda_w"] = out.stage2->kw.amplitude;
        j["stage2"]["ell_w"] = out.stage2->kw.squared_width;
        j["stage2"]["mu"] = out.stage2->mu;
        j["stage2"]["evidence"] = out.stage2->evidence;
        j["stage2"]["evaluations"] = out.stage2->evaluations;
    }
    j["stage3"]["lambda_g"] = out.stage3.kg.amplitude;
    j["stage3"]["ell_g"] = out.stage3.kg.squared_width;
    j["stage3"]["rho_g"] = out.stage3.rho_g;
    j["stage3"]["evidence"] = out.stage3.evidence;
    j["stage3"]["evaluations"] = out.stage3.evaluations;
    if (out.diagnostic) j["noise_strength_diagnostic"] = *out.diagnostic;
    if (fit) j["fit_percent"] = *fit;

    auto f = open_out(path);
    f << j.dump(2) << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_results(const std::filesystem::path& path,
                   const std::vector<benchmark::FitResult>& results) {
    auto f = open_out(path);
    f << "run,system,estimator,ratio,fit,seed\n";
    for (const auto& r : results)
        f << r.run_index << ',' << r.system << ',' << r.estimator << ','
          << format_full(r.ratio) << ',' << format_full(r.fit) << ',' << r.seed << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_manifest(const std::filesystem::path& path,
                    const simulate::BenchmarkScenario& scenario, std::uint64_t base_seed,
                    int runs, const std::vector<std::string>& estimators, int failures,
                    const std::vector<benchmark::RunFailure>& failure_log) {
    json j;
    j["scenario"] = scenario_json(scenario);
    j["base_seed"] = base_seed;
    j["runs"] = runs;
    j["estimators"] = estimators;
    j["failures"] = failures;
    j["failure_log"] = json::array();
    for (const auto& fl : failure_log)
        j["failure_log"].push_back({{"run", fl.run_index}, {"seed", fl.seed},
                                    {"error", fl.message}});
    j["software"] = "trine 0.1.0";
    auto f = open_out(path);
    f << j.dump(2) << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_summary(const std::filesystem::path& path,
                   const std::vector<benchmark::Summary>& rows) {
    auto f = open_out(path);
    f << "system,estimator,count,mean_fit,sd_fit,q25,median,q75\n";
    for (const auto& s : rows)
        f << s.system << ',' << s.estimator << ',' << s.count << ',' << format_full(s.mean_fit)
          << ',' << format_full(s.sd_fit) << ',' << format_full(s.q25) << ','
          << format_full(s.median) << ',' << format_full(s.q75) << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_bins(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, benchmark::BinStat>>& rows) {
    auto f = open_out(path);
    f << "lo,hi,estimator,count,mean_fit\n";
    for (const auto& [name, b] : rows)
        f << format_full(b.lo) << ',' << format_full(b.hi) << ',' << name << ',' << b.count
          << ',' << format_full(b.count > 0 ? b.mean_fit : 0.0) << "\n";
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

void write_theory(const std::filesystem::path& path,
                  const std::vector<theory::RCurvePoint>& points,
                  const std::vector<double>* empirical) {
    if (empirical && empirical->size() != points.size())
        throw InvalidInput("empirical column length must match the curve");
    auto f = open_out(path);
    f << "a,mse_unknown,prediction_var,mse_known,ratio";
    if (empirical) f << ",empirical_mse";
    f << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        f << format_full(p.a) << ',' << format_full(p.mse_unknown) << ','
          << format_full(p.prediction_var) << ',' << format_full(p.mse_known) << ','
          << format_full(p.ratio);
        if (empirical) f << ',' << format_full((*empirical)[i]);
        f << "\n";
    }
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace trine::io
