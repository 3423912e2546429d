#ifndef DISTBOOST_MODEL_IO_HPP
#define DISTBOOST_MODEL_IO_HPP

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "distboost/booster.hpp"
#include "distboost/common.hpp"

namespace distboost {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const TreeNode& node) {
    if (node.is_leaf()) return {{"leaf", node.value}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"gain", node.gain},
            {"left", tree_to_json(*node.left)},
            {"right", tree_to_json(*node.right)}};
}

inline TreeNode tree_from_json(const nlohmann::json& j) {
    TreeNode node;
    if (j.contains("leaf")) {
        node.value = j.at("leaf").get<double>();
        return node;
    }
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    node.gain = j.value("gain", 0.0);
    node.left = std::make_unique<TreeNode>(tree_from_json(j.at("left")));
    node.right = std::make_unique<TreeNode>(tree_from_json(j.at("right")));
    return node;
}

}  // namespace detail

inline nlohmann::json model_to_json(const LssModel& model) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["family"] = model.family_name;
    j["feature_names"] = model.feature_names;
    if (!model.taus.empty()) j["taus"] = model.taus;
    j["training_log"] = model.training_log;
    j["deviance_increased"] = model.deviance_increased;

    nlohmann::json enc;
    enc["global_mean"] = model.encoder.global_mean;
    enc["smoothing"] = model.encoder.smoothing;
    enc["columns"] = nlohmann::json::array();
    for (const auto& col : model.encoder.columns) {
        nlohmann::json c;
        c["feature"] = col.feature;
        c["values"] = nlohmann::json::object();
        for (const auto& [label, v] : col.values) c["values"][label] = v;
        enc["columns"].push_back(std::move(c));
    }
    j["encoder"] = std::move(enc);

    j["ensembles"] = nlohmann::json::array();
    for (const auto& ens : model.ensembles) {
        nlohmann::json e;
        e["base_eta"] = ens.base_eta;
        e["shrinkage"] = ens.shrinkage;
        e["trees"] = nlohmann::json::array();
        for (const auto& t : ens.trees) e["trees"].push_back(detail::tree_to_json(t));
        j["ensembles"].push_back(std::move(e));
    }
    return j;
}

inline LssModel model_from_json(const nlohmann::json& j) {
    if (j.value("format_version", -1) != kModelFormatVersion)
        throw DataError("unsupported model format_version");
    LssModel model;
    model.family_name = j.at("family").get<std::string>();
    if (!model.is_expectile()) model.family = make_family(model.family_name);
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("taus")) model.taus = j.at("taus").get<std::vector<double>>();
    model.training_log = j.value("training_log", std::vector<double>{});
    model.deviance_increased = j.value("deviance_increased", false);

    const auto& enc = j.at("encoder");
    model.encoder.global_mean = enc.at("global_mean").get<double>();
    model.encoder.smoothing = enc.at("smoothing").get<double>();
    for (const auto& c : enc.at("columns")) {
        EncoderState::Column col;
        col.feature = c.at("feature").get<std::string>();
        for (const auto& [label, v] : c.at("values").items())
            col.values[label] = v.get<double>();
        model.encoder.columns.push_back(std::move(col));
    }

    for (const auto& e : j.at("ensembles")) {
        Ensemble ens;
        ens.base_eta = e.at("base_eta").get<double>();
        ens.shrinkage = e.at("shrinkage").get<double>();
        for (const auto& t : e.at("trees"))
            ens.trees.push_back(detail::tree_from_json(t));
        model.ensembles.push_back(std::move(ens));
    }
    return model;
}

inline void save_model(const LssModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

inline LssModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace distboost

#endif  // DISTBOOST_MODEL_IO_HPP
