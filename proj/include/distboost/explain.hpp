#ifndef DISTBOOST_EXPLAIN_HPP
#define DISTBOOST_EXPLAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "distboost/booster.hpp"
#include "distboost/common.hpp"
#include "distboost/dataset.hpp"

namespace distboost {

enum class ImportanceMethod { gain, permutation };

struct ImportanceReport {
    int param_index = 0;
    ImportanceMethod method = ImportanceMethod::gain;
    std::map<std::string, double> scores;
};

/// Split-gain importance of ensemble k, normalized to sum 1 (all-zero when
/// the ensemble has no splits).
inline ImportanceReport importance_gain(const LssModel& model, int k) {
    const auto& ens = model.ensembles.at(static_cast<std::size_t>(k));
    std::vector<double> totals(model.feature_names.size(), 0.0);
    for (const auto& tree : ens.trees)
        for (const auto& [f, gain] : gain_by_feature(tree))
            totals[static_cast<std::size_t>(f)] += gain;
    const double sum = std::accumulate(totals.begin(), totals.end(), 0.0);
    ImportanceReport rep;
    rep.param_index = k;
    rep.method = ImportanceMethod::gain;
    for (std::size_t j = 0; j < totals.size(); ++j)
        rep.scores[model.feature_names[j]] = sum > 0.0 ? totals[j] / sum : 0.0;
    return rep;
}

namespace detail {

inline double nll_with_param_column(const LssModel& model, const Dataset& data, int k,
                                    const std::vector<double>& permuted_col,
                                    std::size_t feature) {
    const Family& fam = *model.family;
    const int K = fam.n_params();
    Dataset perturbed = data;
    perturbed.columns[feature] = permuted_col;
    // Only parameter k's ensemble sees the permuted column.
    auto etas = predict_etas(model, data);
    std::vector<double> eta_k(data.n_rows());
    const Ensemble& ens = model.ensembles[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < data.n_rows(); ++i) eta_k[i] = ens.base_eta;
    for (const auto& t : ens.trees)
        for (std::size_t i = 0; i < data.n_rows(); ++i)
            eta_k[i] += ens.shrinkage * predict_tree(t, perturbed.columns, i);
    double total = 0.0;
    std::vector<double> eta(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (int kc = 0; kc < K; ++kc)
            eta[static_cast<std::size_t>(kc)] = etas[static_cast<std::size_t>(kc)][i];
        eta[static_cast<std::size_t>(k)] = eta_k[i];
        total += data.weight(i) * fam.nll(data.response[i], fam.param_vector(eta));
    }
    return total;
}

}  // namespace detail

/// Mean NLL increase over seeded within-column permutations, with only
/// parameter k's ensemble consuming the permuted column. Negative deltas are
/// reported as-is.
inline ImportanceReport importance_permutation(const LssModel& model, const Dataset& data,
                                               int k, int n_repeats, std::uint64_t seed) {
    detail::check_width(model, data);
    const Family& fam = *model.family;
    const int K = fam.n_params();
    auto etas = detail::predict_etas(model, data);
    double base_nll = 0.0;
    std::vector<double> eta(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (int kc = 0; kc < K; ++kc)
            eta[static_cast<std::size_t>(kc)] = etas[static_cast<std::size_t>(kc)][i];
        base_nll += data.weight(i) * fam.nll(data.response[i], fam.param_vector(eta));
    }

    ImportanceReport rep;
    rep.param_index = k;
    rep.method = ImportanceMethod::permutation;
    std::mt19937_64 rng(seed);
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
        double delta = 0.0;
        for (int r = 0; r < n_repeats; ++r) {
            std::vector<double> col = data.columns[j];
            std::shuffle(col.begin(), col.end(), rng);
            delta += detail::nll_with_param_column(model, data, k, col, j) - base_nll;
        }
        rep.scores[model.feature_names[j]] = delta / static_cast<double>(n_repeats);
    }
    return rep;
}

enum class PdpTarget { parameter, variance };

struct PdpPoint {
    double grid_value = 0.0;
    double mean_value = 0.0;
};

/// Partial dependence of parameter k (natural scale) or of the distribution
/// variance on one numeric feature, over an equi-spaced grid between the
/// observed min and max.
inline std::vector<PdpPoint> partial_dependence(const LssModel& model, const Dataset& data,
                                                int k, std::size_t feature,
                                                std::size_t grid_size,
                                                PdpTarget target = PdpTarget::parameter) {
    detail::check_width(model, data);
    if (feature >= data.n_cols()) throw WidthMismatch("partial_dependence: bad feature index");
    if (data.meta[feature].kind == FeatureKind::categorical)
        throw CategoricalUnsupported("partial dependence requires a numeric feature");
    if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
    if (target == PdpTarget::variance && model.is_expectile())
        throw ConfigError("variance target requires a parametric family");

    const auto [mn_it, mx_it] =
        std::minmax_element(data.columns[feature].begin(), data.columns[feature].end());
    const double lo = *mn_it, hi = *mx_it;

    std::vector<PdpPoint> out;
    Dataset work = data;
    for (std::size_t gidx = 0; gidx < grid_size; ++gidx) {
        const double v =
            lo + (hi - lo) * static_cast<double>(gidx) / static_cast<double>(grid_size - 1);
        std::fill(work.columns[feature].begin(), work.columns[feature].end(), v);
        auto pvs = predict_params(model, work);
        double acc = 0.0;
        for (const auto& pv : pvs)
            acc += target == PdpTarget::variance
                       ? model.family->variance(pv.theta)
                       : pv.theta[static_cast<std::size_t>(k)];
        out.push_back({v, acc / static_cast<double>(pvs.size())});
    }
    return out;
}

}  // namespace distboost

#endif  // DISTBOOST_EXPLAIN_HPP
