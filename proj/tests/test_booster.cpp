#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "distboost/booster.hpp"
#include "distboost/model_io.hpp"
#include "distboost/simulation.hpp"

using namespace distboost;
using Catch::Matchers::WithinAbs;

namespace {

BoostConfig quick() {
    BoostConfig cfg;
    cfg.n_iters_step1 = 15;
    cfg.n_iters_per_cycle = 5;
    cfg.max_cycles = 3;
    cfg.tree.max_depth = 3;
    cfg.tree.min_samples_leaf = 10;
    return cfg;
}

Dataset small_sim(std::uint64_t seed, std::size_t n) {
    SimSpec spec;
    spec.n_train = n;
    spec.n_test = 2;
    spec.n_noise = 2;
    spec.seed = seed;
    return simulate(spec).train;
}

}  // namespace

TEST_CASE("config validation") {
    BoostConfig cfg;
    cfg.shrinkage = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BoostConfig{};
    cfg.n_iters_step1 = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BoostConfig{};
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("constant response collapses to the degenerate fit") {
    Dataset ds = small_sim(1, 200);
    std::fill(ds.response.begin(), ds.response.end(), 4.5);
    LssModel model = fit_step1(ds, make_family("normal"), quick());
    auto pvs = predict_params(model, ds);
    for (const auto& pv : pvs) {
        CHECK_THAT(pv.theta[0], WithinAbs(4.5, 1e-9));
        CHECK(pv.theta[1] == kSigmaFloor);
    }
}

TEST_CASE("step-1 per-parameter training nll is non-increasing") {
    Dataset ds = small_sim(2, 600);
    LssModel model = fit_step1(ds, make_family("normal"), quick());
    REQUIRE(model.step1_nll_log.size() == 2);
    for (const auto& trace : model.step1_nll_log) {
        REQUIRE(trace.size() >= 2);
        for (std::size_t m = 1; m < trace.size(); ++m)
            CHECK(trace[m] <= trace[m - 1] + 1e-9);
    }
}

TEST_CASE("step-1 beats the intercept-only deviance") {
    Dataset ds = small_sim(3, 800);
    auto fam = make_family("normal");
    auto mle = unconditional_mle(*fam, ds.response);
    double dev0 = 0.0;
    for (double y : ds.response) dev0 += 2.0 * fam->nll(y, mle);
    LssModel model = fit_step1(ds, fam, quick());
    REQUIRE(model.training_log.size() == 1);
    CHECK(model.training_log[0] < dev0);
}

TEST_CASE("step 2 with max_cycles=0 is a no-op") {
    Dataset ds = small_sim(4, 300);
    BoostConfig cfg = quick();
    LssModel model = fit_step1(ds, make_family("normal"), cfg);
    const auto before = model_to_json(model);
    cfg.max_cycles = 0;
    LssModel after = fit_step2(model.clone(), ds, cfg);
    CHECK(model_to_json(after) == before);
    CHECK(after.training_log.size() == 1);
}

TEST_CASE("huge epsilon stops step 2 after exactly one cycle") {
    Dataset ds = small_sim(5, 300);
    BoostConfig cfg = quick();
    cfg.epsilon = 1e100;
    LssModel model = fit_step2(fit_step1(ds, make_family("normal"), cfg), ds, cfg);
    CHECK(model.training_log.size() == 2);  // step-1 deviance + one cycle
}

TEST_CASE("step 2 appends per-cycle tree budgets per parameter") {
    Dataset ds = small_sim(6, 300);
    BoostConfig cfg = quick();
    cfg.epsilon = 1e-12;  // run to the cap
    LssModel m1 = fit_step1(ds, make_family("normal"), cfg);
    const std::size_t base = m1.ensembles[0].trees.size();
    LssModel m2 = fit_step2(std::move(m1), ds, cfg);
    const std::size_t cycles = m2.training_log.size() - 1;
    for (const auto& ens : m2.ensembles)
        CHECK(ens.trees.size() ==
              base + cycles * static_cast<std::size_t>(cfg.n_iters_per_cycle));
}

TEST_CASE("predict_params on a treeless model returns the base parameters") {
    auto fam = make_family("normal");
    LssModel model;
    model.family_name = "normal";
    model.family = fam;
    model.feature_names = {"x"};
    Ensemble mu, sigma;
    mu.base_eta = 10.0;
    sigma.base_eta = std::log(2.0);
    model.ensembles.push_back(std::move(mu));
    model.ensembles.push_back(std::move(sigma));

    Dataset ds;
    ds.meta.push_back({"x", FeatureKind::numeric, {}});
    ds.columns = {{0.1, 0.7}};
    ds.raw.resize(1);
    ds.response = {0.0, 0.0};
    auto pvs = predict_params(model, ds);
    for (const auto& pv : pvs) {
        CHECK_THAT(pv.theta[0], WithinAbs(10.0, 1e-12));
        CHECK_THAT(pv.theta[1], WithinAbs(2.0, 1e-12));
        CHECK(pv.theta[1] > 0.0);
    }
}

TEST_CASE("duplicated rows get identical predictions") {
    Dataset ds = small_sim(7, 300);
    LssModel model = fit_step1(ds, make_family("normal"), quick());
    Dataset two;
    two.meta = ds.meta;
    two.columns.resize(ds.n_cols());
    two.raw.resize(ds.n_cols());
    for (std::size_t j = 0; j < ds.n_cols(); ++j)
        two.columns[j] = {ds.columns[j][0], ds.columns[j][0]};
    two.response = {0.0, 0.0};
    auto pvs = predict_params(model, two);
    CHECK(pvs[0].theta == pvs[1].theta);
}

TEST_CASE("interval endpoints equal the corresponding quantiles") {
    Dataset ds = small_sim(8, 300);
    LssModel model = fit_step1(ds, make_family("normal"), quick());
    auto [lo, hi] = predict_interval(model, ds, 0.9);
    auto q = predict_quantiles(model, ds, {0.05, 0.95});
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        // (1-level)/2 and the literal 0.05 differ in the last ulp, so the
        // endpoints may differ by a rounding error but nothing more.
        CHECK_THAT(lo[i], WithinAbs(q[i][0], 1e-9));
        CHECK_THAT(hi[i], WithinAbs(q[i][1], 1e-9));
        CHECK(lo[i] <= hi[i]);
    }
    CHECK_THROWS_AS(predict_interval(model, ds, 1.0), BadProbability);
}

TEST_CASE("quantile matrix is monotone across sorted probs") {
    Dataset ds = small_sim(9, 200);
    LssModel model = fit_step1(ds, make_family("normal"), quick());
    auto q = predict_quantiles(model, ds, {0.1, 0.25, 0.5, 0.75, 0.9});
    for (const auto& row : q)
        for (std::size_t j = 1; j < row.size(); ++j) CHECK(row[j] >= row[j - 1]);
}

TEST_CASE("monte carlo samples reproduce the predicted quantiles") {
    auto fam = make_family("normal");
    LssModel model;
    model.family_name = "normal";
    model.family = fam;
    model.feature_names = {"x"};
    Ensemble mu, sigma;
    mu.base_eta = 10.0;
    sigma.base_eta = 0.0;  // sigma = 1
    model.ensembles.push_back(std::move(mu));
    model.ensembles.push_back(std::move(sigma));

    Dataset one;
    one.meta.push_back({"x", FeatureKind::numeric, {}});
    one.columns = {{0.5}};
    one.raw.resize(1);
    one.response = {0.0};

    auto draws = sample_predictive(model, one, 100000, 12345);
    std::sort(draws[0].begin(), draws[0].end());
    auto q = predict_quantiles(model, one, {0.05, 0.5, 0.95});
    for (std::size_t j = 0; j < 3; ++j) {
        const double p = std::vector<double>{0.05, 0.5, 0.95}[j];
        const double emp = draws[0][static_cast<std::size_t>(p * 100000.0)];
        CHECK_THAT(emp, WithinAbs(q[0][j], 0.02));
    }
    auto again = sample_predictive(model, one, 10, 12345);
    auto again2 = sample_predictive(model, one, 10, 12345);
    CHECK(again == again2);
}

TEST_CASE("refitting with the same config is bit-identical") {
    Dataset ds = small_sim(10, 400);
    BoostConfig cfg = quick();
    LssModel a = fit_step2(fit_step1(ds, make_family("normal"), cfg), ds, cfg);
    LssModel b = fit_step2(fit_step1(ds, make_family("normal"), cfg), ds, cfg);
    CHECK(model_to_json(a) == model_to_json(b));
}

TEST_CASE("holdout fraction caps step-1 iterations") {
    Dataset ds = small_sim(11, 600);
    BoostConfig cfg = quick();
    cfg.n_iters_step1 = 40;
    cfg.holdout_fraction = 0.25;
    LssModel model = fit_step1(ds, make_family("normal"), cfg);
    for (const auto& ens : model.ensembles)
        CHECK(ens.trees.size() <= 40);
}

TEST_CASE("expectile fitting validates taus") {
    Dataset ds = small_sim(12, 300);
    BoostConfig cfg = quick();
    CHECK_THROWS_AS(fit_expectiles(ds, {}, cfg), BadTau);
    CHECK_THROWS_AS(fit_expectiles(ds, {0.9, 0.1}, cfg), BadTau);
    CHECK_THROWS_AS(fit_expectiles(ds, {0.0}, cfg), BadTau);
    auto ens = fit_expectiles(ds, {0.25, 0.75}, cfg);
    CHECK(ens.size() == 2);
}

TEST_CASE("expectile models reject distribution-only operations") {
    Dataset ds = small_sim(13, 300);
    LssModel model = make_expectile_model(ds, {0.5}, quick());
    CHECK_THROWS_AS(predict_quantiles(model, ds, {0.5}), ConfigError);
    CHECK_THROWS_AS(sample_predictive(model, ds, 2, 0), ConfigError);
    CHECK_THROWS_AS(fit_step2(model.clone(), ds, quick()), ConfigError);
    auto pvs = predict_params(model, ds);
    CHECK(pvs[0].theta.size() == 1);
}
