#ifndef DISTBOOST_SCORING_HPP
#define DISTBOOST_SCORING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "distboost/common.hpp"
#include "distboost/distributions.hpp"

namespace distboost {

/// Continuous ranked probability score. Closed form for the Normal family,
/// otherwise the unbiased pairwise sample estimator with S seeded draws.
inline double crps(const Family& fam, const ParamVector& pv, double y,
                   std::size_t n_samples = 1000, std::uint64_t seed = 0) {
    for (double t : pv.theta)
        if (!std::isfinite(t)) throw InvalidParams("crps: non-finite parameter");
    if (fam.name() == "normal") {
        const double mu = pv.theta[0], sigma = pv.theta[1];
        const double z = (y - mu) / sigma;
        return sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) -
                        1.0 / std::sqrt(std::numbers::pi));
    }
    std::mt19937_64 rng(seed);
    std::vector<double> x(n_samples);
    for (auto& xi : x) xi = fam.sample(pv, rng);
    double term1 = 0.0;
    for (double xi : x) term1 += std::abs(xi - y);
    term1 /= static_cast<double>(n_samples);
    // sum_{i<j} |x_i - x_j| via the sorted-coefficient identity.
    std::sort(x.begin(), x.end());
    double pair_sum = 0.0;
    const double S = static_cast<double>(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        pair_sum += (2.0 * static_cast<double>(i) + 1.0 - S) * x[i];
    const double term2 = pair_sum / (S * (S - 1.0));
    return term1 - term2;
}

/// Logarithmic score: the negative log density at y (identical to the NLL).
inline double log_score(const Family& fam, const ParamVector& pv, double y) {
    return fam.nll(y, pv, 1.0);
}

/// Normalized sum of quantile losses
/// QL_tau = 2[tau(y-yhat) 1_{y-yhat>0} + (1-tau)(yhat-y) 1_{y-yhat<=0}],
/// divided by sum |y|.
inline double quantile_loss(std::span<const double> y, std::span<const double> yhat,
                            double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw BadTau("tau must be in (0,1)");
    if (y.size() != yhat.size()) throw WidthMismatch("quantile_loss: vector length mismatch");
    if (y.empty()) throw EmptyInput("quantile_loss: empty input");
    double num = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        num += 2.0 * (d > 0.0 ? tau * d : (1.0 - tau) * (-d));
        denom += std::abs(y[i]);
    }
    if (denom == 0.0) throw ZeroDenominator("quantile_loss: sum |y| is zero");
    return num / denom;
}

/// Quantile residuals r_i = Phi^{-1}(F(y_i | theta_i)), with u clamped to
/// [1e-10, 1-1e-10]. Discrete families use randomized quantile residuals with
/// a seeded uniform draw between F(y-1) and F(y).
inline std::vector<double> quantile_residuals(const Family& fam,
                                              const std::vector<ParamVector>& pvs,
                                              std::span<const double> y,
                                              std::uint64_t seed = 0) {
    if (pvs.size() != y.size())
        throw WidthMismatch("quantile_residuals: length mismatch");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double u;
        if (fam.is_discrete()) {
            const double hi = fam.cdf(y[i], pvs[i]);
            const double lo = y[i] >= 1.0 ? fam.cdf(y[i] - 1.0, pvs[i]) : 0.0;
            u = lo + unif(rng) * (hi - lo);
        } else {
            u = fam.cdf(y[i], pvs[i]);
        }
        u = std::clamp(u, 1e-10, 1.0 - 1e-10);
        r[i] = std_normal_quantile(u);
    }
    return r;
}

/// Kolmogorov-Smirnov statistic of a sample against the standard Normal.
inline double ks_statistic_normal(std::vector<double> sample) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = std_normal_cdf(sample[i]);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
    }
    return d;
}

struct GaicEntry {
    std::string family;
    double gaic = 0.0;
    int n_params = 0;
};

/// Intercept-only GAIC screening: fit the unconditional MLE of each candidate
/// and rank by 2*sum(nll) + penalty*K. Candidates whose support excludes any
/// observation, or whose fit fails, are skipped.
inline std::vector<GaicEntry> gaic_select(std::span<const double> y,
                                          const std::vector<std::string>& candidates,
                                          double penalty = 2.0) {
    std::vector<std::string> names;
    for (const auto& c : candidates)
        if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);

    std::vector<GaicEntry> out;
    for (const auto& name : names) {
        auto fam = make_family(name);
        bool ok = true;
        for (double yi : y)
            if (!fam->in_support(yi)) { ok = false; break; }
        if (!ok) continue;
        try {
            ParamVector pv = unconditional_mle(*fam, y);
            double dev = 0.0;
            for (double yi : y) dev += 2.0 * fam->nll(yi, pv);
            out.push_back({name, dev + penalty * fam->n_params(), fam->n_params()});
        } catch (const NoConvergence&) {
            continue;
        }
    }
    if (out.empty()) throw AllCandidatesFailed("no candidate family could be fit");
    std::sort(out.begin(), out.end(), [](const GaicEntry& a, const GaicEntry& b) {
        if (a.gaic != b.gaic) return a.gaic < b.gaic;
        if (a.n_params != b.n_params) return a.n_params < b.n_params;
        return a.family < b.family;
    });
    return out;
}

/// Point-forecast metrics. Metrics whose domain constraints fail (MAPE/RMSPE
/// with zero responses, RMSLE with values <= -1) are omitted from the map.
inline std::map<std::string, double> point_metrics(std::span<const double> y,
                                                   std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw WidthMismatch("point_metrics: length mismatch");
    if (y.empty()) throw EmptyInput("point_metrics: empty input");
    const double n = static_cast<double>(y.size());

    double se = 0.0, ae = 0.0, ybar = 0.0;
    std::vector<double> abs_err(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        se += e * e;
        ae += std::abs(e);
        abs_err[i] = std::abs(e);
        ybar += y[i];
    }
    ybar /= n;
    double ss_base = 0.0, ae_base = 0.0;
    for (double yi : y) {
        ss_base += (yi - ybar) * (yi - ybar);
        ae_base += std::abs(yi - ybar);
    }

    std::map<std::string, double> m;
    m["mse"] = se / n;
    m["rmse"] = std::sqrt(se / n);
    m["mae"] = ae / n;
    std::sort(abs_err.begin(), abs_err.end());
    m["median_ae"] = y.size() % 2 == 1
                         ? abs_err[y.size() / 2]
                         : 0.5 * (abs_err[y.size() / 2 - 1] + abs_err[y.size() / 2]);
    if (ae_base > 0.0) m["rae"] = ae / ae_base;
    if (ss_base > 0.0) {
        m["rrse"] = std::sqrt(se / ss_base);
        m["r2"] = 1.0 - se / ss_base;
    }

    bool any_zero = std::any_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    if (!any_zero) {
        double ape = 0.0, spe = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = (y[i] - yhat[i]) / y[i];
            ape += std::abs(p);
            spe += p * p;
        }
        m["mape"] = ape / n;
        m["rmspe"] = std::sqrt(spe / n);
    }

    bool log_ok = true;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] <= -1.0 || yhat[i] <= -1.0) { log_ok = false; break; }
    if (log_ok) {
        double sle = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = std::log1p(y[i]) - std::log1p(yhat[i]);
            sle += d * d;
        }
        m["rmsle"] = std::sqrt(sle / n);
    }
    return m;
}

}  // namespace distboost

#endif  // DISTBOOST_SCORING_HPP
