#ifndef DISTBOOST_SIMULATION_HPP
#define DISTBOOST_SIMULATION_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "distboost/common.hpp"
#include "distboost/dataset.hpp"
#include "distboost/distributions.hpp"

namespace distboost {

struct SimSpec {
    std::size_t n_train = 7000;
    std::size_t n_test = 3000;
    std::size_t n_noise = 10;
    std::uint64_t seed = 0;
};

/// Heteroskedastic benchmark: x ~ U(0,1),
/// y ~ Normal(10, sigma^2(x)) with sigma^2(x) = 1 + 4*(0.3<x<0.5) + 2*(x>0.7),
/// plus independent U(0,1) noise features.
inline double sim_variance(double x) {
    double v = 1.0;
    if (x > 0.3 && x < 0.5) v += 4.0;
    if (x > 0.7) v += 2.0;
    return v;
}

/// True conditional quantile of the benchmark response.
struct TruthQuantile {
    double operator()(double p, double x) const {
        return 10.0 + std_normal_quantile(p) * std::sqrt(sim_variance(x));
    }
};

struct SimData {
    Dataset train;
    Dataset test;
    TruthQuantile truth;
};

inline SimData simulate(const SimSpec& spec) {
    if (spec.n_train == 0 || spec.n_test == 0) throw ConfigError("simulation sizes must be positive");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto generate = [&](std::size_t n) {
        Dataset ds;
        ds.meta.push_back({"x", FeatureKind::numeric, {}});
        for (std::size_t j = 1; j <= spec.n_noise; ++j)
            ds.meta.push_back({"x" + std::to_string(j), FeatureKind::numeric, {}});
        ds.columns.resize(ds.meta.size());
        ds.raw.resize(ds.meta.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double x = unif(rng);
            ds.columns[0].push_back(x);
            ds.response.push_back(10.0 + std::sqrt(sim_variance(x)) * normal(rng));
            for (std::size_t j = 1; j <= spec.n_noise; ++j)
                ds.columns[j].push_back(unif(rng));
        }
        return ds;
    };

    SimData out;
    out.train = generate(spec.n_train);
    out.test = generate(spec.n_test);
    return out;
}

}  // namespace distboost

#endif  // DISTBOOST_SIMULATION_HPP
