// Command-line surface: train, predict, evaluate, select-family, simulate,
// explain. Exit codes: 0 ok, 2 usage/config errors, 3 data/model errors.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distboost/booster.hpp"
#include "distboost/dataset.hpp"
#include "distboost/distributions.hpp"
#include "distboost/explain.hpp"
#include "distboost/model_io.hpp"
#include "distboost/scoring.hpp"
#include "distboost/simulation.hpp"

namespace fs = std::filesystem;
using namespace distboost;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Labels (column names, map keys) use the shortest round-trip-friendly form so
// q_0.05 stays readable; data cells keep the full-precision fmt above.
std::string fmt_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

void echo_config(CLI::App& app, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    write_text(out_dir / "resolved_config.toml", app.config_to_str(true, false));
}

std::vector<double> parse_probs(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size())
            throw ConfigError(std::string("cannot parse ") + what + " value '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
    return out;
}

/// Load a feature-only CSV matching the model's schema. Extra columns are
/// ignored; every model feature must be present by name.
Dataset load_feature_csv(const std::string& path, const LssModel& model) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("empty file: " + path);
    const auto header = distboost::detail::parse_csv_line(line);

    std::set<std::string> categorical;
    for (const auto& col : model.encoder.columns) categorical.insert(col.feature);

    std::vector<std::size_t> col_idx;
    for (const auto& name : model.feature_names) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw MissingColumn("feature column '" + name + "' not found in " + path);
        col_idx.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    Dataset ds;
    for (const auto& name : model.feature_names)
        ds.meta.push_back({name,
                           categorical.count(name) ? FeatureKind::categorical
                                                   : FeatureKind::numeric,
                           {}});
    ds.columns.resize(ds.meta.size());
    ds.raw.resize(ds.meta.size());

    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++data_row;
        const auto fields = distboost::detail::parse_csv_line(line);
        for (std::size_t f = 0; f < col_idx.size(); ++f) {
            if (col_idx[f] >= fields.size())
                throw DataError("short row " + std::to_string(data_row) + " in " + path);
            const std::string& tok = fields[col_idx[f]];
            if (ds.meta[f].kind == FeatureKind::categorical) {
                ds.raw[f].push_back(tok);
                ds.columns[f].push_back(0.0);
            } else {
                ds.columns[f].push_back(
                    distboost::detail::parse_number(tok, ds.meta[f].name, data_row));
            }
        }
    }
    if (ds.columns.empty() || ds.columns[0].empty())
        throw EmptyDataset("no data rows in " + path);
    // predict-side datasets carry no response; keep lengths consistent
    ds.response.assign(ds.columns[0].size(), 0.0);
    return ds;
}

std::vector<double> load_response_column(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("empty file: " + path);
    const auto header = distboost::detail::parse_csv_line(line);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw MissingColumn("column '" + name + "' not found in " + path);
    const auto idx = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++data_row;
        const auto fields = distboost::detail::parse_csv_line(line);
        if (idx >= fields.size())
            throw DataError("short row " + std::to_string(data_row) + " in " + path);
        out.push_back(distboost::detail::parse_number(fields[idx], name, data_row));
    }
    if (out.empty()) throw EmptyDataset("no data rows in " + path);
    return out;
}

void write_dataset_csv(const fs::path& path, const Dataset& ds,
                       const std::string& response_name) {
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.meta.size(); ++j) out << ds.meta[j].name << ",";
    out << response_name << "\n";
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < ds.n_cols(); ++j) out << fmt(ds.columns[j][i]) << ",";
        out << fmt(ds.response[i]) << "\n";
    }
    write_text(path, out.str());
}

struct TrainArgs {
    std::string data_path, response, family, weight_col, out_model, out_dir = ".";
    std::vector<std::string> categorical;
    std::string taus_csv;
    double smoothing = 1.0;
    BoostConfig boost;
};

void cmd_train(CLI::App& app, TrainArgs& a) {
    echo_config(app, a.out_dir);
    std::set<std::string> cat(a.categorical.begin(), a.categorical.end());
    Dataset raw = load_csv(a.data_path, a.response, cat, a.weight_col);
    auto [data, encoder] = encode_categoricals(raw, a.smoothing);

    LssModel model;
    if (a.family == "expectile") {
        if (a.taus_csv.empty()) throw ConfigError("--family expectile requires --taus");
        model = make_expectile_model(data, parse_probs(a.taus_csv, "tau"), a.boost);
    } else {
        auto fam = make_family(a.family);
        model = fit_step1(data, fam, a.boost);
        model = fit_step2(std::move(model), data, a.boost);
    }
    model.encoder = encoder;

    const fs::path model_path =
        a.out_model.empty() ? fs::path(a.out_dir) / "model.json" : fs::path(a.out_model);
    save_model(model, model_path.string());

    std::ostringstream log;
    log << "cycle,deviance,deviance_increased\n";
    for (std::size_t q = 0; q < model.training_log.size(); ++q)
        log << q << "," << fmt(model.training_log[q]) << ","
            << (model.deviance_increased ? 1 : 0) << "\n";
    write_text(fs::path(a.out_dir) / "training_log.csv", log.str());
}

struct PredictArgs {
    std::string model_path, data_path, out_path, out_dir = ".";
    std::string quantiles_csv;
    double interval = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
};

void cmd_predict(CLI::App& app, PredictArgs& a) {
    echo_config(app, a.out_dir);
    LssModel model = load_model(a.model_path);
    Dataset data = model.encoder.transform(load_feature_csv(a.data_path, model));

    auto pvs = predict_params(model, data);
    const std::size_t n = data.n_rows();

    std::vector<double> probs;
    if (!a.quantiles_csv.empty()) probs = parse_probs(a.quantiles_csv, "quantile");
    std::vector<std::vector<double>> qmat;
    if (!probs.empty()) qmat = predict_quantiles(model, data, probs);
    std::vector<double> lo, hi;
    if (a.interval > 0.0) std::tie(lo, hi) = predict_interval(model, data, a.interval);
    std::vector<std::vector<double>> samples;
    if (a.n_samples > 0)
        samples = sample_predictive(model, data, static_cast<std::size_t>(a.n_samples), a.seed);

    std::ostringstream out;
    const std::size_t K = model.ensembles.size();
    for (std::size_t k = 0; k < K; ++k) {
        if (k) out << ",";
        if (model.is_expectile())
            out << "expectile_" << fmt_label(model.taus[k]);
        else
            out << "theta_" << (k + 1);
    }
    for (double p : probs) out << ",q_" << fmt_label(p);
    if (a.interval > 0.0) out << ",lo,hi";
    for (int s = 0; s < a.n_samples; ++s) out << ",sample_" << (s + 1);
    out << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            if (k) out << ",";
            out << fmt(pvs[i].theta[k]);
        }
        for (std::size_t j = 0; j < probs.size(); ++j) out << "," << fmt(qmat[i][j]);
        if (a.interval > 0.0) out << "," << fmt(lo[i]) << "," << fmt(hi[i]);
        for (int s = 0; s < a.n_samples; ++s)
            out << "," << fmt(samples[i][static_cast<std::size_t>(s)]);
        out << "\n";
    }
    const fs::path out_path =
        a.out_path.empty() ? fs::path(a.out_dir) / "predictions.csv" : fs::path(a.out_path);
    write_text(out_path, out.str());
}

struct EvaluateArgs {
    std::string model_path, data_path, response, out_dir = ".";
    std::string taus_csv = "0.05,0.5,0.95";
    int crps_samples = 1000;
    std::uint64_t seed = 0;
};

void cmd_evaluate(CLI::App& app, EvaluateArgs& a) {
    echo_config(app, a.out_dir);
    LssModel model = load_model(a.model_path);
    if (model.is_expectile())
        throw ConfigError("evaluate requires a parametric family model");
    Dataset data = model.encoder.transform(load_feature_csv(a.data_path, model));
    data.response = load_response_column(a.data_path, a.response);
    if (data.response.size() != data.columns[0].size())
        throw DataError("response/feature row count mismatch");

    auto pvs = predict_params(model, data);
    const Family& fam = *model.family;
    const std::size_t n = data.n_rows();

    double crps_sum = 0.0, log_sum = 0.0;
    std::vector<double> yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
        crps_sum += crps(fam, pvs[i], data.response[i],
                         static_cast<std::size_t>(a.crps_samples), a.seed + i);
        log_sum += log_score(fam, pvs[i], data.response[i]);
        yhat[i] = fam.mean(pvs[i].theta);
    }
    auto metrics = point_metrics(data.response, yhat);

    const auto taus = parse_probs(a.taus_csv, "tau");
    auto qmat = predict_quantiles(model, data, taus);
    nlohmann::json ql = nlohmann::json::object();
    for (std::size_t t = 0; t < taus.size(); ++t) {
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = qmat[i][t];
        ql[fmt_label(taus[t])] = quantile_loss(data.response, q, taus[t]);
    }

    nlohmann::json report;
    report["crps"] = crps_sum / static_cast<double>(n);
    report["log_score"] = log_sum / static_cast<double>(n);
    report["point_metrics"] = metrics;
    report["quantile_losses"] = ql;
    write_text(fs::path(a.out_dir) / "report.json", report.dump(2) + "\n");

    auto residuals = quantile_residuals(fam, pvs, data.response, a.seed);
    std::ostringstream res;
    res << "row,residual\n";
    for (std::size_t i = 0; i < n; ++i) res << i << "," << fmt(residuals[i]) << "\n";
    write_text(fs::path(a.out_dir) / "quantile_residuals.csv", res.str());
}

struct SelectFamilyArgs {
    std::string data_path, response, out_dir = ".";
    std::string candidates_csv = "normal,lognormal,gamma,weibull,studentt";
    double penalty = 2.0;
};

void cmd_select_family(CLI::App& app, SelectFamilyArgs& a) {
    echo_config(app, a.out_dir);
    Dataset data = load_csv(a.data_path, a.response);
    std::vector<std::string> candidates;
    std::stringstream ss(a.candidates_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) candidates.push_back(tok);
    auto ranking = gaic_select(data.response, candidates, a.penalty);
    std::ostringstream out;
    out << "family,gaic,n_params\n";
    for (const auto& e : ranking)
        out << e.family << "," << fmt(e.gaic) << "," << e.n_params << "\n";
    write_text(fs::path(a.out_dir) / "gaic.csv", out.str());
}

struct SimulateArgs {
    SimSpec spec;
    std::string out_dir = ".";
    std::string truth_probs_csv = "0.05,0.95";
};

void cmd_simulate(CLI::App& app, SimulateArgs& a) {
    echo_config(app, a.out_dir);
    SimData sim = simulate(a.spec);
    write_dataset_csv(fs::path(a.out_dir) / "train.csv", sim.train, "y");
    write_dataset_csv(fs::path(a.out_dir) / "test.csv", sim.test, "y");

    const auto probs = parse_probs(a.truth_probs_csv, "truth-prob");
    std::ostringstream out;
    out << "x";
    for (double p : probs) out << ",q_" << fmt_label(p);
    out << "\n";
    for (std::size_t i = 0; i < sim.test.n_rows(); ++i) {
        const double x = sim.test.columns[0][i];
        out << fmt(x);
        for (double p : probs) out << "," << fmt(sim.truth(p, x));
        out << "\n";
    }
    write_text(fs::path(a.out_dir) / "truth.csv", out.str());
}

struct ExplainArgs {
    std::string model_path, data_path, response, out_dir = ".";
    std::string method = "gain";
    std::string target = "parameter";
    std::string feature;
    int param = 0;
    int grid_size = 20;
    int repeats = 5;
    std::uint64_t seed = 0;
};

void cmd_explain(CLI::App& app, ExplainArgs& a) {
    echo_config(app, a.out_dir);
    LssModel model = load_model(a.model_path);
    Dataset data = model.encoder.transform(load_feature_csv(a.data_path, model));

    if (a.method == "gain" || a.method == "permutation") {
        ImportanceReport rep;
        if (a.method == "gain") {
            rep = importance_gain(model, a.param);
        } else {
            if (a.response.empty())
                throw ConfigError("permutation importance requires --response");
            data.response = load_response_column(a.data_path, a.response);
            rep = importance_permutation(model, data, a.param, a.repeats, a.seed);
        }
        std::ostringstream out;
        out << "feature,score\n";
        for (const auto& name : model.feature_names)
            out << name << "," << fmt(rep.scores.at(name)) << "\n";
        write_text(fs::path(a.out_dir) / "importance.csv", out.str());
    } else if (a.method == "pdp") {
        if (a.feature.empty()) throw ConfigError("pdp requires --feature");
        auto it = std::find(model.feature_names.begin(), model.feature_names.end(), a.feature);
        if (it == model.feature_names.end())
            throw MissingColumn("feature '" + a.feature + "' not in model");
        const auto target =
            a.target == "variance" ? PdpTarget::variance : PdpTarget::parameter;
        auto curve = partial_dependence(
            model, data, a.param,
            static_cast<std::size_t>(it - model.feature_names.begin()),
            static_cast<std::size_t>(a.grid_size), target);
        std::ostringstream out;
        out << "grid_value,mean_" << (a.target == "variance" ? "variance" : "theta") << "\n";
        for (const auto& pt : curve) out << fmt(pt.grid_value) << "," << fmt(pt.mean_value) << "\n";
        write_text(fs::path(a.out_dir) / "pdp.csv", out.str());
    } else {
        throw ConfigError("unknown explain method '" + a.method + "'");
    }
}

void add_boost_options(CLI::App* cmd, BoostConfig& cfg) {
    cmd->add_option("--iters", cfg.n_iters_step1, "Step-1 boosting iterations per parameter");
    cmd->add_option("--shrinkage", cfg.shrinkage, "Learning rate in (0,1]");
    cmd->add_option("--cycle-iters", cfg.n_iters_per_cycle,
                    "Trees appended per parameter per step-2 cycle");
    cmd->add_option("--epsilon", cfg.epsilon, "Relative-deviance stopping tolerance");
    cmd->add_option("--max-cycles", cfg.max_cycles, "Step-2 cycle cap");
    cmd->add_option("--depth", cfg.tree.max_depth, "Maximum tree depth");
    cmd->add_option("--min-leaf", cfg.tree.min_samples_leaf, "Minimum samples per leaf");
    cmd->add_option("--lambda", cfg.tree.lambda, "L2 leaf regularizer");
    cmd->add_option("--gamma", cfg.tree.gamma, "Minimum split gain");
    cmd->add_option("--seed", cfg.seed, "Random seed");
    cmd->add_option("--holdout", cfg.holdout_fraction,
                    "Holdout fraction for the step-1 iteration cap (0 = off)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributional gradient boosting: tree ensembles for every "
                 "parameter of a response distribution"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file (flags override file values)");

    int threads = 0;
    if (const char* env = std::getenv("DISTBOOST_THREADS")) threads = std::atoi(env);
    app.add_option("--threads", threads, "Worker thread cap (0 = auto)");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Fit a distributional model");
    train->add_option("--data", train_args.data_path, "Training CSV")->required();
    train->add_option("--response", train_args.response, "Response column")->required();
    train->add_option("--family", train_args.family, "Distribution family")->required();
    train->add_option("--categorical", train_args.categorical,
                      "Categorical feature columns");
    train->add_option("--weight-col", train_args.weight_col, "Observation weight column");
    train->add_option("--smoothing", train_args.smoothing,
                      "Target-statistic encoder smoothing");
    train->add_option("--taus", train_args.taus_csv, "Expectile levels (expectile family)");
    train->add_option("--out", train_args.out_model, "Model output path");
    train->add_option("--out-dir", train_args.out_dir, "Output directory");
    add_boost_options(train, train_args.boost);

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Predict distribution parameters");
    predict->add_option("--model", predict_args.model_path, "Model JSON")->required();
    predict->add_option("--data", predict_args.data_path, "Feature CSV")->required();
    predict->add_option("--quantiles", predict_args.quantiles_csv, "Quantile levels");
    predict->add_option("--interval", predict_args.interval, "Central interval level");
    predict->add_option("--samples", predict_args.n_samples, "Predictive samples per row");
    predict->add_option("--seed", predict_args.seed, "Sampling seed");
    predict->add_option("--out", predict_args.out_path, "Predictions CSV path");
    predict->add_option("--out-dir", predict_args.out_dir, "Output directory");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score a fitted model");
    evaluate->add_option("--model", eval_args.model_path, "Model JSON")->required();
    evaluate->add_option("--data", eval_args.data_path, "Evaluation CSV")->required();
    evaluate->add_option("--response", eval_args.response, "Response column")->required();
    evaluate->add_option("--taus", eval_args.taus_csv, "Quantile-loss levels");
    evaluate->add_option("--crps-samples", eval_args.crps_samples, "CRPS sample count");
    evaluate->add_option("--seed", eval_args.seed, "Scoring seed");
    evaluate->add_option("--out-dir", eval_args.out_dir, "Output directory");

    SelectFamilyArgs select_args;
    auto* select = app.add_subcommand("select-family", "Rank candidate families by GAIC");
    select->add_option("--data", select_args.data_path, "CSV file")->required();
    select->add_option("--response", select_args.response, "Response column")->required();
    select->add_option("--candidates", select_args.candidates_csv, "Candidate families");
    select->add_option("--penalty", select_args.penalty, "GAIC penalty per parameter");
    select->add_option("--out-dir", select_args.out_dir, "Output directory");

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Generate the heteroskedastic benchmark");
    sim->add_option("--seed", sim_args.spec.seed, "Random seed");
    sim->add_option("--n-train", sim_args.spec.n_train, "Training rows");
    sim->add_option("--n-test", sim_args.spec.n_test, "Test rows");
    sim->add_option("--n-noise", sim_args.spec.n_noise, "Noise feature count");
    sim->add_option("--truth-probs", sim_args.truth_probs_csv, "Truth quantile levels");
    sim->add_option("--out-dir", sim_args.out_dir, "Output directory");

    ExplainArgs explain_args;
    auto* explain = app.add_subcommand("explain", "Feature importance and partial dependence");
    explain->add_option("--model", explain_args.model_path, "Model JSON")->required();
    explain->add_option("--data", explain_args.data_path, "CSV file")->required();
    explain->add_option("--response", explain_args.response,
                        "Response column (permutation method)");
    explain->add_option("--param", explain_args.param, "Distribution parameter index");
    explain->add_option("--method", explain_args.method, "gain | permutation | pdp");
    explain->add_option("--feature", explain_args.feature, "Feature for pdp");
    explain->add_option("--grid-size", explain_args.grid_size, "pdp grid points");
    explain->add_option("--repeats", explain_args.repeats, "Permutation repeats");
    explain->add_option("--seed", explain_args.seed, "Seed");
    explain->add_option("--target", explain_args.target, "pdp target: parameter | variance");
    explain->add_option("--out-dir", explain_args.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
        if (train->parsed()) cmd_train(app, train_args);
        if (predict->parsed()) cmd_predict(app, predict_args);
        if (evaluate->parsed()) cmd_evaluate(app, eval_args);
        if (select->parsed()) cmd_select_family(app, select_args);
        if (sim->parsed()) cmd_simulate(app, sim_args);
        if (explain->parsed()) cmd_explain(app, explain_args);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
