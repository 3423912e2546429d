// Acceptance gate: one line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "distboost/booster.hpp"
#include "distboost/dataset.hpp"
#include "distboost/distributions.hpp"
#include "distboost/explain.hpp"
#include "distboost/model_io.hpp"
#include "distboost/scoring.hpp"
#include "distboost/simulation.hpp"

using namespace distboost;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& name, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s  %2d  %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic derivatives vs finite differences.
// g oracle: central difference of the NLL in eta_k.
// h oracle: central difference of the analytic gradient in eta_k (a second
// difference of the NLL loses too many digits to discriminate at 1e-4).
void criterion_1() {
    const auto t0 = Clock::now();
    const double eps = 1e-6;
    double worst = 0.0;
    std::mt19937_64 rng(20240815);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

    for (const auto& name : family_names()) {
        auto fam = make_family(name);
        const int K = fam->n_params();
        for (int k = 0; k < K; ++k) {
            for (int rep = 0; rep < 200; ++rep) {
                std::vector<double> eta;
                for (int kk = 0; kk < K; ++kk)
                    eta.push_back(fam->links()[static_cast<std::size_t>(kk)] ==
                                          LinkKind::identity
                                      ? uni(-2.0, 2.0)
                                      : uni(-1.0, 1.5));
                ParamVector pv = fam->param_vector(eta);
                double y;
                switch (fam->support()) {
                    case Support::real: y = pv.theta[0] + uni(-3.0, 3.0); break;
                    case Support::positive: y = uni(0.05, 8.0); break;
                    default: y = std::floor(uni(0.0, 12.0)); break;
                }

                auto shifted = [&](double delta) {
                    std::vector<double> e = eta;
                    e[static_cast<std::size_t>(k)] += delta;
                    return fam->param_vector(e);
                };
                const double g_fd =
                    (fam->nll(y, shifted(eps)) - fam->nll(y, shifted(-eps))) / (2.0 * eps);
                const double h_fd = (fam->grad_hess_raw(y, shifted(eps), k).g -
                                     fam->grad_hess_raw(y, shifted(-eps), k).g) /
                                    (2.0 * eps);
                const auto gh = fam->grad_hess_raw(y, pv, k);
                worst = std::max(worst,
                                 std::abs(gh.g - g_fd) / std::max(std::abs(g_fd), 1e-3));
                worst = std::max(worst,
                                 std::abs(gh.h - h_fd) / std::max(std::abs(h_fd), 1e-3));
            }
        }
    }
    const double dt = seconds_since(t0);
    report(1, worst < 1e-4 && dt < 5.0, "analytic derivatives match finite differences",
           "max rel err " + fmt(worst) + ", " + fmt(dt) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 2: Normal with sigma frozen at 1 == plain squared-error boosting.
void criterion_2() {
    const auto t0 = Clock::now();
    const std::size_t n = 1000;
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.5);

    Dataset ds;
    for (int j = 0; j < 3; ++j)
        ds.meta.push_back({"f" + std::to_string(j), FeatureKind::numeric, {}});
    ds.columns.resize(3);
    ds.raw.resize(3);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : ds.columns) c.push_back(unif(rng));
        ds.response.push_back(std::sin(6.0 * ds.columns[0][i]) + 2.0 * ds.columns[1][i] +
                              noise(rng));
    }
    double mean = 0.0;
    for (double y : ds.response) mean += y;
    mean /= static_cast<double>(n);

    BoostConfig cfg;
    cfg.n_iters_step1 = 50;
    cfg.tree.min_samples_leaf = 10;
    SortedFeatures sf(ds.columns);
    auto fam = make_family("normal");
    auto [newton, trace] =
        boost_single_parameter(ds, sf, *fam, 0, {mean, 1.0}, mean, cfg, cfg.n_iters_step1);

    // Reference squared-error gradient booster: g = yhat - y, h = 1.
    std::vector<TreeNode> ref_trees;
    std::vector<double> yhat(n, mean), g(n), h(n, 1.0);
    for (int m = 0; m < cfg.n_iters_step1; ++m) {
        for (std::size_t i = 0; i < n; ++i) g[i] = yhat[i] - ds.response[i];
        TreeNode tree = fit_tree(sf, g, h, cfg.tree);
        for (std::size_t i = 0; i < n; ++i)
            yhat[i] += cfg.shrinkage * predict_tree(tree, ds.columns, i);
        ref_trees.push_back(std::move(tree));
    }

    double worst_tree = 0.0, worst_pred = 0.0;
    for (std::size_t m = 0; m < ref_trees.size(); ++m)
        for (std::size_t i = 0; i < n; ++i)
            worst_tree = std::max(worst_tree,
                                  std::abs(predict_tree(newton.trees[m], ds.columns, i) -
                                           predict_tree(ref_trees[m], ds.columns, i)));
    for (std::size_t i = 0; i < n; ++i) {
        double eta = newton.base_eta;
        for (const auto& t : newton.trees)
            eta += newton.shrinkage * predict_tree(t, ds.columns, i);
        worst_pred = std::max(worst_pred, std::abs(eta - yhat[i]));
    }
    const double dt = seconds_since(t0);
    report(2, worst_tree < 1e-10 && worst_pred < 1e-10 && dt < 10.0,
           "frozen-scale Newton run equals squared-error boosting tree-for-tree",
           "max tree diff " + fmt(worst_tree) + ", max pred diff " + fmt(worst_pred) +
               ", " + fmt(dt) + "s");
}

// ---------------------------------------------------------------------------
// Criteria 3-8 + 13 share one full-size heteroskedastic run.
void criteria_3_to_8_and_13() {
    SimSpec spec;
    spec.seed = 42;
    SimData sim = simulate(spec);

    const auto t0 = Clock::now();
    BoostConfig cfg;  // library defaults throughout
    LssModel model =
        fit_step2(fit_step1(sim.train, make_family("normal"), cfg), sim.train, cfg);
    const double train_time = seconds_since(t0);

    // 3: 90% interval coverage on the held-out test set.
    auto [lo, hi] = predict_interval(model, sim.test, 0.9);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < sim.test.n_rows(); ++i)
        if (sim.test.response[i] >= lo[i] && sim.test.response[i] <= hi[i]) ++covered;
    const double coverage =
        static_cast<double>(covered) / static_cast<double>(sim.test.n_rows());
    report(3, coverage >= 0.88 && coverage <= 0.92 && train_time < 120.0,
           "90% interval coverage on the simulated test set",
           "coverage " + fmt(coverage) + ", train " + fmt(train_time) + "s");

    // 4: mean absolute deviation of the 5%/95% quantile predictions vs truth.
    auto q = predict_quantiles(model, sim.test, {0.05, 0.95});
    double mad = 0.0;
    for (std::size_t i = 0; i < sim.test.n_rows(); ++i) {
        const double x = sim.test.columns[0][i];
        mad += std::abs(q[i][0] - sim.truth(0.05, x));
        mad += std::abs(q[i][1] - sim.truth(0.95, x));
    }
    mad /= 2.0 * static_cast<double>(sim.test.n_rows());
    report(4, mad < 0.35, "5%/95% quantile predictions track the true quantiles",
           "MAD " + fmt(mad));

    // 5: gain importance for the scale parameter.
    auto imp = importance_gain(model, 1);
    const double x_share = imp.scores.at("x");
    double worst_noise = 0.0;
    for (const auto& [name, score] : imp.scores)
        if (name != "x") worst_noise = std::max(worst_noise, score);
    report(5, x_share > 0.5 && worst_noise < 0.1,
           "scale-parameter importance concentrates on the informative feature",
           "x " + fmt(x_share) + ", max noise " + fmt(worst_noise));

    // 6: predicted variance recovers the piecewise profile.
    auto pvs = predict_params(model, sim.test);
    double bump = 0.0, baseline = 0.0, high = 0.0;
    double nb = 0.0, n0 = 0.0, nh = 0.0;
    for (std::size_t i = 0; i < sim.test.n_rows(); ++i) {
        const double x = sim.test.columns[0][i];
        const double v = model.family->variance(pvs[i].theta);
        if (x > 0.35 && x < 0.45) { bump += v; nb += 1.0; }
        if (x > 0.05 && x < 0.25) { baseline += v; n0 += 1.0; }
        if (x > 0.75 && x < 0.95) { high += v; nh += 1.0; }
    }
    bump /= nb;
    baseline /= n0;
    high /= nh;
    report(6, bump > 3.0 * baseline && high > 2.0 * baseline,
           "heteroskedastic variance profile recovered",
           "bump/base " + fmt(bump / baseline) + ", high/base " + fmt(high / baseline));

    // 7: deviance log is non-increasing and the stopping rule resolved.
    bool monotone = true;
    for (std::size_t i = 1; i < model.training_log.size(); ++i)
        if (model.training_log[i] > model.training_log[i - 1] + 1e-9) monotone = false;
    bool resolved = false;
    std::string how = "empty log";
    if (model.training_log.size() >= 2) {
        const double last = model.training_log.back();
        const double prev = model.training_log[model.training_log.size() - 2];
        const double diff = std::abs(last - prev) / std::abs(prev);
        if (diff < cfg.epsilon) {
            resolved = true;
            how = "final diff " + fmt(diff) + " < eps";
        } else if (static_cast<int>(model.training_log.size()) - 1 == cfg.max_cycles) {
            resolved = true;
            how = std::string("cycle cap, increase flag ") +
                  (model.deviance_increased ? "set" : "clear");
        }
    }
    report(7, monotone && resolved, "training deviance non-increasing with stopping rule",
           std::string(monotone ? "monotone" : "NOT monotone") + ", " + how);

    // 8: quantile residual calibration against the model's own parameters.
    std::mt19937_64 rng(2024);
    std::vector<double> ysim(sim.test.n_rows());
    for (std::size_t i = 0; i < ysim.size(); ++i)
        ysim[i] = model.family->sample(pvs[i], rng);
    auto residuals = quantile_residuals(*model.family, pvs, ysim, 1);
    const double ks = ks_statistic_normal(residuals);
    report(8, ks < 0.05, "quantile residuals calibrated on self-simulated data",
           "KS " + fmt(ks) + " on n=" + std::to_string(ysim.size()));

    // 13: persistence and determinism.
    namespace fs = std::filesystem;
    const std::string path_a = "acceptance_model_a.json";
    const std::string path_b = "acceptance_model_b.json";
    save_model(model, path_a);
    LssModel loaded = load_model(path_a);
    auto reloaded = predict_params(loaded, sim.test);
    bool bit_identical = reloaded.size() == pvs.size();
    for (std::size_t i = 0; bit_identical && i < pvs.size(); ++i)
        bit_identical = reloaded[i].theta == pvs[i].theta && reloaded[i].eta == pvs[i].eta;

    // Byte-identical repeated runs, checked on a smaller seeded fit.
    SimSpec small;
    small.n_train = 800;
    small.n_test = 2;
    small.n_noise = 3;
    small.seed = 7;
    Dataset sd = simulate(small).train;
    BoostConfig scfg;
    scfg.n_iters_step1 = 20;
    scfg.max_cycles = 2;
    scfg.n_iters_per_cycle = 5;
    save_model(fit_step2(fit_step1(sd, make_family("normal"), scfg), sd, scfg), path_a);
    save_model(fit_step2(fit_step1(sd, make_family("normal"), scfg), sd, scfg), path_b);
    std::ifstream fa(path_a), fb(path_b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    const bool bytes_equal = sa.str() == sb.str() && !sa.str().empty();
    fs::remove(path_a);
    fs::remove(path_b);
    report(13, bit_identical && bytes_equal,
           "save/load round trip bit-identical; repeated runs byte-identical",
           std::string("round trip ") + (bit_identical ? "ok" : "DIFFERS") +
               ", model files " + (bytes_equal ? "equal" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// Criterion 9: closed-form Normal CRPS vs Monte Carlo.
void criterion_9() {
    const auto t0 = Clock::now();
    auto fam = make_family("normal");
    std::mt19937_64 rng(314159);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };
    const std::size_t S = 100000;
    std::vector<double> x(S);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const double mu = uni(-5.0, 5.0);
        const double sigma = uni(0.5, 3.0);
        const double y = mu + sigma * uni(-3.0, 3.0);
        // Stratified Monte Carlo: one uniform draw per probability stratum,
        // mapped through the Normal quantile function.  Still an independent
        // sampling-based oracle, but with far smaller estimator variance than
        // plain i.i.d. draws at the same sample count.
        const auto params = fam->param_vector_from_theta({mu, sigma});
        for (std::size_t i = 0; i < S; ++i) {
            const double p = (static_cast<double>(i) + unif(rng)) / static_cast<double>(S);
            x[i] = fam->quantile(p, params);
        }
        double term1 = 0.0;
        for (double xi : x) term1 += std::abs(xi - y);
        term1 /= static_cast<double>(S);
        std::sort(x.begin(), x.end());
        double pair_sum = 0.0;
        for (std::size_t i = 0; i < S; ++i)
            pair_sum +=
                (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(S)) * x[i];
        const double mc = term1 - pair_sum / (static_cast<double>(S) * (S - 1.0));
        const double closed = crps(*fam, fam->param_vector_from_theta({mu, sigma}), y);
        worst = std::max(worst, std::abs(mc - closed));
    }
    const double dt = seconds_since(t0);
    report(9, worst < 0.01 && dt < 30.0, "closed-form CRPS matches Monte Carlo",
           "max diff " + fmt(worst) + ", " + fmt(dt) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 10: vectorized quantile loss vs scalar brute force.
void criterion_10() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    const std::size_t n = 1000;
    std::vector<double> y(n), yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = unif(rng);
        yhat[i] = unif(rng);
    }
    double worst = 0.0;
    for (double tau : {0.01, 0.5, 0.99}) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = y[i] - yhat[i];
            num += d > 0.0 ? 2.0 * tau * d : 2.0 * (1.0 - tau) * (-d);
            den += std::abs(y[i]);
        }
        worst = std::max(worst, std::abs(quantile_loss(y, yhat, tau) - num / den));
    }
    report(10, worst < 1e-12, "vectorized quantile loss equals the scalar loop",
           "max diff " + fmt(worst));
}

// ---------------------------------------------------------------------------
// Criterion 11: intercept-only GAIC identifies the generating family.
void criterion_11() {
    const std::vector<std::string> candidates = {"normal", "gamma", "lognormal", "weibull"};
    std::vector<std::pair<std::string, std::vector<double>>> datasets;
    const std::size_t n = 5000;
    {
        std::mt19937_64 rng(101);
        std::normal_distribution<double> d(10.0, 2.0);
        std::vector<double> y(n);
        for (auto& yi : y) yi = d(rng);
        datasets.emplace_back("normal", std::move(y));
    }
    {
        std::mt19937_64 rng(102);
        std::gamma_distribution<double> d(2.0, 1.5);
        std::vector<double> y(n);
        for (auto& yi : y) yi = d(rng);
        datasets.emplace_back("gamma", std::move(y));
    }
    {
        std::mt19937_64 rng(103);
        std::lognormal_distribution<double> d(1.0, 0.5);
        std::vector<double> y(n);
        for (auto& yi : y) yi = d(rng);
        datasets.emplace_back("lognormal", std::move(y));
    }
    {
        std::mt19937_64 rng(104);
        std::weibull_distribution<double> d(1.5, 2.0);
        std::vector<double> y(n);
        for (auto& yi : y) yi = d(rng);
        datasets.emplace_back("weibull", std::move(y));
    }
    bool all = true;
    std::string detail;
    for (const auto& [truth, y] : datasets) {
        auto ranking = gaic_select(y, candidates);
        const bool ok = !ranking.empty() && ranking[0].family == truth;
        if (!ok) all = false;
        if (!detail.empty()) detail += ", ";
        detail += truth + "->" + (ranking.empty() ? "none" : ranking[0].family);
    }
    report(11, all, "GAIC screening recovers each generating family", detail);
}

// ---------------------------------------------------------------------------
// Criterion 12: expectile ordering and the tau=0.5 / squared-error identity.
void criterion_12() {
    SimSpec spec;
    spec.n_train = 2000;
    spec.n_test = 1000;
    spec.n_noise = 3;
    spec.seed = 7;
    SimData sim = simulate(spec);

    BoostConfig cfg;
    cfg.n_iters_step1 = 60;
    cfg.tree.max_depth = 4;
    cfg.tree.min_samples_leaf = 15;
    LssModel model = make_expectile_model(sim.train, {0.1, 0.5, 0.9}, cfg);
    auto pvs = predict_params(model, sim.test);
    double m10 = 0.0, m50 = 0.0, m90 = 0.0;
    for (const auto& pv : pvs) {
        m10 += pv.theta[0];
        m50 += pv.theta[1];
        m90 += pv.theta[2];
    }
    const double n = static_cast<double>(pvs.size());
    m10 /= n;
    m50 /= n;
    m90 /= n;

    // Independent squared-error booster as the tau=0.5 reference.
    double mean = 0.0;
    for (double y : sim.train.response) mean += y;
    mean /= static_cast<double>(sim.train.n_rows());
    SortedFeatures sf(sim.train.columns);
    std::vector<double> yhat(sim.train.n_rows(), mean), g(sim.train.n_rows()),
        h(sim.train.n_rows(), 1.0);
    std::vector<TreeNode> trees;
    for (int m = 0; m < cfg.n_iters_step1; ++m) {
        for (std::size_t i = 0; i < yhat.size(); ++i)
            g[i] = yhat[i] - sim.train.response[i];
        TreeNode tree = fit_tree(sf, g, h, cfg.tree);
        for (std::size_t i = 0; i < yhat.size(); ++i)
            yhat[i] += cfg.shrinkage * predict_tree(tree, sim.train.columns, i);
        trees.push_back(std::move(tree));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < pvs.size(); ++i) {
        double pred = mean;
        for (const auto& t : trees)
            pred += cfg.shrinkage * predict_tree(t, sim.test.columns, i);
        worst = std::max(worst, std::abs(pred - pvs[i].theta[1]));
    }
    report(12, m10 <= m50 && m50 <= m90 && worst < 1e-10,
           "expectile means ordered; tau=0.5 equals squared-error boosting",
           "means " + fmt(m10) + " <= " + fmt(m50) + " <= " + fmt(m90) +
               ", max tau=0.5 diff " + fmt(worst));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criteria_3_to_8_and_13();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    if (failures == 0)
        std::printf("all 13 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
