#ifndef DISTBOOST_BOOSTER_HPP
#define DISTBOOST_BOOSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distboost/common.hpp"
#include "distboost/dataset.hpp"
#include "distboost/distributions.hpp"
#include "distboost/tree.hpp"

namespace distboost {

struct BoostConfig {
    int n_iters_step1 = 100;       // M
    double shrinkage = 0.1;        // learning rate
    int n_iters_per_cycle = 25;    // M2, trees appended per parameter per cycle
    double epsilon = 1e-5;         // relative-deviance stopping tolerance
    int max_cycles = 10;
    TreeConfig tree;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.0;  // > 0 enables validation-based iteration cap

    void validate() const {
        if (n_iters_step1 < 1) throw ConfigError("n_iters_step1 must be >= 1");
        if (!(shrinkage > 0.0 && shrinkage <= 1.0))
            throw ConfigError("shrinkage must be in (0,1]");
        if (n_iters_per_cycle < 1) throw ConfigError("n_iters_per_cycle must be >= 1");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
        if (max_cycles < 0) throw ConfigError("max_cycles must be >= 0");
    }
};

/// Additive model for one distributional parameter on the link scale.
struct Ensemble {
    double base_eta = 0.0;
    double shrinkage = 0.1;
    std::vector<TreeNode> trees;

    double predict(std::span<const double> row) const {
        double eta = base_eta;
        for (const auto& t : trees) eta += shrinkage * predict_tree(t, row);
        return eta;
    }

    Ensemble clone() const {
        Ensemble e;
        e.base_eta = base_eta;
        e.shrinkage = shrinkage;
        e.trees.reserve(trees.size());
        for (const auto& t : trees) e.trees.push_back(t.clone());
        return e;
    }
};

/// A fitted distributional model: one ensemble per parameter plus the
/// categorical encoder and the training deviance log.
struct LssModel {
    std::string family_name;
    std::shared_ptr<const Family> family;  // null for expectile models
    std::vector<Ensemble> ensembles;
    EncoderState encoder;
    std::vector<std::string> feature_names;
    std::vector<double> taus;                        // expectile models only
    std::vector<double> training_log;                // deviance after step 1, then per cycle
    std::vector<std::vector<double>> step1_nll_log;  // per parameter, per iteration
    bool deviance_increased = false;

    bool is_expectile() const { return family_name == "expectile"; }

    LssModel clone() const {
        LssModel m;
        m.family_name = family_name;
        m.family = family;
        m.ensembles.reserve(ensembles.size());
        for (const auto& e : ensembles) m.ensembles.push_back(e.clone());
        m.encoder = encoder;
        m.feature_names = feature_names;
        m.taus = taus;
        m.training_log = training_log;
        m.step1_nll_log = step1_nll_log;
        m.deviance_increased = deviance_increased;
        return m;
    }
};

namespace detail {

inline void check_width(const LssModel& model, const Dataset& data) {
    if (data.n_cols() != model.feature_names.size())
        throw WidthMismatch("model expects " + std::to_string(model.feature_names.size()) +
                            " features, got " + std::to_string(data.n_cols()));
}

// eta matrix: etas[k][i] for parameter k, row i.
inline std::vector<std::vector<double>> predict_etas(const LssModel& model,
                                                     const Dataset& data) {
    check_width(model, data);
    const std::size_t n = data.n_rows();
    std::vector<std::vector<double>> etas(model.ensembles.size());
    for (std::size_t k = 0; k < model.ensembles.size(); ++k) {
        const Ensemble& ens = model.ensembles[k];
        etas[k].assign(n, ens.base_eta);
        for (const auto& t : ens.trees)
            for (std::size_t i = 0; i < n; ++i)
                etas[k][i] += ens.shrinkage * predict_tree(t, data.columns, i);
    }
    return etas;
}

inline double dataset_deviance(const Family& fam, const Dataset& data,
                               const std::vector<std::vector<double>>& etas) {
    const int K = fam.n_params();
    std::vector<double> eta(static_cast<std::size_t>(K));
    double dev = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (int k = 0; k < K; ++k) eta[static_cast<std::size_t>(k)] = etas[static_cast<std::size_t>(k)][i];
        dev += 2.0 * fam.nll(data.response[i], fam.param_vector(eta), data.weight(i));
    }
    return dev;
}

}  // namespace detail

/// Boost a single distributional parameter with the co-parameters frozen at
/// the given natural-scale values. Returns the ensemble and its per-iteration
/// training NLL trace.
inline std::pair<Ensemble, std::vector<double>> boost_single_parameter(
    const Dataset& data, const SortedFeatures& sf, const Family& fam, int k,
    const std::vector<double>& frozen_theta, double base_eta, const BoostConfig& cfg,
    int n_iters) {
    const std::size_t n = data.n_rows();
    const std::size_t kk = static_cast<std::size_t>(k);
    Ensemble ens;
    ens.base_eta = base_eta;
    ens.shrinkage = cfg.shrinkage;

    std::vector<double> eta_k(n, base_eta);
    std::vector<double> g(n), h(n);
    std::vector<double> theta = frozen_theta;
    std::vector<double> nll_trace;
    nll_trace.reserve(static_cast<std::size_t>(n_iters) + 1);

    auto current_nll = [&]() {
        double total = 0.0;
        std::vector<double> th = frozen_theta;
        for (std::size_t i = 0; i < n; ++i) {
            th[kk] = fam.theta_from_eta(k, eta_k[i]);
            ParamVector pv{{}, th};
            total += data.weight(i) * fam.nll(data.response[i], pv);
        }
        return total;
    };
    nll_trace.push_back(current_nll());

    for (int m = 0; m < n_iters; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            theta = frozen_theta;
            theta[kk] = fam.theta_from_eta(k, eta_k[i]);
            ParamVector pv{{}, theta};
            auto gh = fam.grad_hess(data.response[i], pv, k, data.weight(i));
            g[i] = gh.g;
            h[i] = gh.h;
        }
        TreeNode tree = fit_tree(sf, g, h, cfg.tree);
        for (std::size_t i = 0; i < n; ++i)
            eta_k[i] += cfg.shrinkage * predict_tree(tree, data.columns, i);
        ens.trees.push_back(std::move(tree));
        nll_trace.push_back(current_nll());
    }
    return {std::move(ens), std::move(nll_trace)};
}

/// Algorithm step 1: fit one ensemble per parameter, each with the other
/// parameters frozen at their unconditional ML estimates.
inline LssModel fit_step1(const Dataset& data, std::shared_ptr<const Family> family,
                          const BoostConfig& cfg) {
    cfg.validate();
    if (data.has_raw_categoricals())
        throw DataError("fit_step1: dataset has unencoded categorical columns");
    if (data.n_rows() < 2 * static_cast<std::size_t>(cfg.tree.min_samples_leaf))
        throw TooFewRows("need at least 2*min_samples_leaf rows");

    const Family& fam = *family;
    ParamVector mle = unconditional_mle(fam, data.response, data.weights);

    LssModel model;
    model.family_name = fam.name();
    model.family = family;
    for (const auto& m : data.meta) model.feature_names.push_back(m.name);

    const Dataset* fit_data = &data;
    Dataset sub_train, sub_valid;
    if (cfg.holdout_fraction > 0.0) {
        std::tie(sub_train, sub_valid) = split_train_test(data, cfg.holdout_fraction, cfg.seed);
        fit_data = &sub_train;
    }
    SortedFeatures sf(fit_data->columns);

    for (int k = 0; k < fam.n_params(); ++k) {
        auto [ens, trace] = boost_single_parameter(*fit_data, sf, fam, k, mle.theta,
                                                   mle.eta[static_cast<std::size_t>(k)], cfg,
                                                   cfg.n_iters_step1);
        if (cfg.holdout_fraction > 0.0) {
            // Cap the iteration count at the best holdout NLL.
            std::vector<double> frozen = mle.theta;
            std::size_t best_m = 0;
            double best_nll = std::numeric_limits<double>::infinity();
            std::vector<double> eta_v(sub_valid.n_rows(), ens.base_eta);
            auto valid_nll = [&]() {
                double total = 0.0;
                std::vector<double> th = frozen;
                for (std::size_t i = 0; i < sub_valid.n_rows(); ++i) {
                    th[static_cast<std::size_t>(k)] = fam.theta_from_eta(k, eta_v[i]);
                    total += sub_valid.weight(i) *
                             fam.nll(sub_valid.response[i], ParamVector{{}, th});
                }
                return total;
            };
            best_nll = valid_nll();
            for (std::size_t m = 0; m < ens.trees.size(); ++m) {
                for (std::size_t i = 0; i < sub_valid.n_rows(); ++i)
                    eta_v[i] += cfg.shrinkage * predict_tree(ens.trees[m], sub_valid.columns, i);
                double v = valid_nll();
                if (v < best_nll) {
                    best_nll = v;
                    best_m = m + 1;
                }
            }
            ens.trees.resize(best_m);
            trace.resize(best_m + 1);
        }
        model.ensembles.push_back(std::move(ens));
        model.step1_nll_log.push_back(std::move(trace));
    }

    auto etas = detail::predict_etas(model, data);
    model.training_log.push_back(detail::dataset_deviance(fam, data, etas));
    return model;
}

/// Algorithm step 2: cyclic refinement. Each cycle appends trees to every
/// parameter in order, with gradients taken at the current full predictions;
/// stops when the relative deviance change drops below epsilon or the cycle
/// cap is reached.
inline LssModel fit_step2(LssModel model, const Dataset& data, const BoostConfig& cfg) {
    cfg.validate();
    if (model.is_expectile())
        throw ConfigError("step 2 does not apply to expectile models");
    if (cfg.max_cycles == 0) return model;

    const Family& fam = *model.family;
    const int K = fam.n_params();
    const std::size_t n = data.n_rows();
    SortedFeatures sf(data.columns);

    auto etas = detail::predict_etas(model, data);
    double prev_dev = model.training_log.empty()
                          ? detail::dataset_deviance(fam, data, etas)
                          : model.training_log.back();

    std::vector<double> g(n), h(n), eta(static_cast<std::size_t>(K));
    for (int q = 1; q <= cfg.max_cycles; ++q) {
        for (int k = 0; k < K; ++k) {
            const std::size_t kk = static_cast<std::size_t>(k);
            for (int m = 0; m < cfg.n_iters_per_cycle; ++m) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (int kc = 0; kc < K; ++kc)
                        eta[static_cast<std::size_t>(kc)] = etas[static_cast<std::size_t>(kc)][i];
                    ParamVector pv = fam.param_vector(eta);
                    auto gh = fam.grad_hess(data.response[i], pv, k, data.weight(i));
                    g[i] = gh.g;
                    h[i] = gh.h;
                }
                TreeNode tree = fit_tree(sf, g, h, cfg.tree);
                for (std::size_t i = 0; i < n; ++i)
                    etas[kk][i] += model.ensembles[kk].shrinkage *
                                   predict_tree(tree, data.columns, i);
                model.ensembles[kk].trees.push_back(std::move(tree));
            }
        }
        const double dev = detail::dataset_deviance(fam, data, etas);
        model.training_log.push_back(dev);
        if (dev > prev_dev) model.deviance_increased = true;
        const double diff = std::abs(dev - prev_dev) / std::abs(prev_dev);
        prev_dev = dev;
        if (diff < cfg.epsilon) break;
    }
    return model;
}

/// Per-row fitted parameter vectors for already-encoded feature rows.
inline std::vector<ParamVector> predict_params(const LssModel& model, const Dataset& data) {
    if (model.is_expectile()) {
        detail::check_width(model, data);
        std::vector<ParamVector> out(data.n_rows());
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
            auto row = data.row(i);
            ParamVector pv;
            for (const auto& ens : model.ensembles) {
                double v = ens.predict(row);
                pv.eta.push_back(v);
                pv.theta.push_back(v);
            }
            out[i] = std::move(pv);
        }
        return out;
    }
    auto etas = detail::predict_etas(model, data);
    const int K = model.family->n_params();
    std::vector<ParamVector> out(data.n_rows());
    std::vector<double> eta(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (int k = 0; k < K; ++k)
            eta[static_cast<std::size_t>(k)] = etas[static_cast<std::size_t>(k)][i];
        out[i] = model.family->param_vector(eta);
    }
    return out;
}

/// Quantile matrix, rows x probs.
inline std::vector<std::vector<double>> predict_quantiles(const LssModel& model,
                                                          const Dataset& data,
                                                          const std::vector<double>& probs) {
    if (model.is_expectile())
        throw ConfigError("quantile prediction is undefined for expectile models");
    for (double p : probs)
        if (!(p > 0.0 && p < 1.0)) throw BadProbability("probability must be in (0,1)");
    auto pvs = predict_params(model, data);
    std::vector<std::vector<double>> out(pvs.size(), std::vector<double>(probs.size()));
    for (std::size_t i = 0; i < pvs.size(); ++i)
        for (std::size_t j = 0; j < probs.size(); ++j)
            out[i][j] = model.family->quantile(probs[j], pvs[i]);
    return out;
}

/// Central interval of the given level: quantiles at (1-l)/2 and (1+l)/2.
inline std::pair<std::vector<double>, std::vector<double>> predict_interval(
    const LssModel& model, const Dataset& data, double level) {
    if (!(level > 0.0 && level < 1.0)) throw BadProbability("interval level must be in (0,1)");
    auto q = predict_quantiles(model, data, {(1.0 - level) / 2.0, (1.0 + level) / 2.0});
    std::vector<double> lo(q.size()), hi(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        lo[i] = q[i][0];
        hi[i] = q[i][1];
    }
    return {std::move(lo), std::move(hi)};
}

/// Seeded draws from the per-row predictive distributions, rows x n_samples.
inline std::vector<std::vector<double>> sample_predictive(const LssModel& model,
                                                          const Dataset& data,
                                                          std::size_t n_samples,
                                                          std::uint64_t seed) {
    if (model.is_expectile())
        throw ConfigError("sampling is undefined for expectile models");
    auto pvs = predict_params(model, data);
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> out(pvs.size(), std::vector<double>(n_samples));
    for (std::size_t i = 0; i < pvs.size(); ++i)
        for (std::size_t s = 0; s < n_samples; ++s)
            out[i][s] = model.family->sample(pvs[i], rng);
    return out;
}

/// One independent asymmetric-least-squares ensemble per tau; base offset is
/// the (weighted) sample mean.
inline std::vector<Ensemble> fit_expectiles(const Dataset& data,
                                            const std::vector<double>& taus,
                                            const BoostConfig& cfg) {
    cfg.validate();
    if (taus.empty()) throw BadTau("need at least one tau");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0 && taus[i] < 1.0)) throw BadTau("tau must be in (0,1)");
        if (i > 0 && !(taus[i] > taus[i - 1])) throw BadTau("taus must be strictly increasing");
    }
    if (data.has_raw_categoricals())
        throw DataError("fit_expectiles: dataset has unencoded categorical columns");

    auto moments = detail::weighted_moments(data.response, data.weights);
    SortedFeatures sf(data.columns);
    const std::size_t n = data.n_rows();
    std::vector<Ensemble> out;
    std::vector<double> g(n), h(n);
    for (double tau : taus) {
        Ensemble ens;
        ens.base_eta = moments.mean;
        ens.shrinkage = cfg.shrinkage;
        std::vector<double> yhat(n, ens.base_eta);
        for (int m = 0; m < cfg.n_iters_step1; ++m) {
            for (std::size_t i = 0; i < n; ++i) {
                auto ev = expectile_loss(tau, data.response[i], yhat[i]);
                g[i] = data.weight(i) * ev.g;
                h[i] = data.weight(i) * ev.h;
            }
            TreeNode tree = fit_tree(sf, g, h, cfg.tree);
            for (std::size_t i = 0; i < n; ++i)
                yhat[i] += cfg.shrinkage * predict_tree(tree, data.columns, i);
            ens.trees.push_back(std::move(tree));
        }
        out.push_back(std::move(ens));
    }
    return out;
}

/// Wrap expectile ensembles in a persistable model.
inline LssModel make_expectile_model(const Dataset& data, const std::vector<double>& taus,
                                     const BoostConfig& cfg) {
    LssModel model;
    model.family_name = "expectile";
    model.taus = taus;
    model.ensembles = fit_expectiles(data, taus, cfg);
    for (const auto& m : data.meta) model.feature_names.push_back(m.name);
    return model;
}

}  // namespace distboost

#endif  // DISTBOOST_BOOSTER_HPP
