#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "memoqcd/dmkde.hpp"

namespace memoqcd {

inline constexpr const char* kModelFormat = "memoqcd-model";
inline constexpr int kModelVersion = 1;

inline nlohmann::ordered_json model_to_json(const DMKDEModel& model) {
    model.check_valid();
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["kernel"] = {{"gamma", model.kernel.gamma},
                   {"a", model.kernel.a},
                   {"b", model.kernel.b},
                   {"n_pairs", model.kernel.n_pairs}};
    nlohmann::ordered_json qfm;
    qfm["mode"] = search_mode_name(model.qfm_mode);
    qfm["n_qubits"] = model.layout.n_x;
    qfm["chromosome"] = model.qfm_chromosome.to_string();
    qfm["params"] = model.qfm_params;
    qfm["search_seed"] = model.search_seed;
    if (model.qfm_mse) qfm["mse"] = *model.qfm_mse;
    j["qfm"] = std::move(qfm);
    j["layout"] = {{"n_x", model.layout.n_x},
                   {"d", model.layout.d},
                   {"n_a", model.layout.n_a},
                   {"n_layers", model.layout.n_layers}};
    j["train"] = {{"seed", model.train_seed}, {"params", model.hea_params}};
    if (model.scale)
        j["scale"] = {{"offset", model.scale->offset}, {"factor", model.scale->factor}};
    if (model.norm_constant) j["norm_constant"] = *model.norm_constant;
    return j;
}

inline DMKDEModel model_from_json(const nlohmann::ordered_json& j) {
    if (j.value("format", "") != kModelFormat)
        throw std::runtime_error("not a model file (missing format marker)");
    if (j.value("version", 0) != kModelVersion)
        throw std::runtime_error("unsupported model file version");

    DMKDEModel model;
    const auto& kernel = j.at("kernel");
    model.kernel.gamma = kernel.at("gamma").get<double>();
    model.kernel.a = kernel.at("a").get<double>();
    model.kernel.b = kernel.at("b").get<double>();
    model.kernel.n_pairs = kernel.at("n_pairs").get<int>();

    const auto& layout = j.at("layout");
    model.layout.n_x = layout.at("n_x").get<int>();
    model.layout.d = layout.at("d").get<int>();
    model.layout.n_a = layout.at("n_a").get<int>();
    model.layout.n_layers = layout.at("n_layers").get<int>();

    const auto& qfm = j.at("qfm");
    model.qfm_mode = search_mode_from_name(qfm.at("mode").get<std::string>());
    if (qfm.at("n_qubits").get<int>() != model.layout.n_x)
        throw std::runtime_error("feature-map qubit count disagrees with layout");
    model.qfm_chromosome = Chromosome::from_string(qfm.at("chromosome").get<std::string>());
    model.qfm_params = qfm.at("params").get<std::vector<double>>();
    model.search_seed = qfm.at("search_seed").get<std::uint64_t>();
    if (qfm.contains("mse")) model.qfm_mse = qfm.at("mse").get<double>();

    const auto& train = j.at("train");
    model.train_seed = train.at("seed").get<std::uint64_t>();
    model.hea_params = train.at("params").get<std::vector<double>>();

    if (j.contains("scale")) {
        ScaleTransform scale;
        scale.offset = j.at("scale").at("offset").get<std::vector<double>>();
        scale.factor = j.at("scale").at("factor").get<std::vector<double>>();
        model.scale = std::move(scale);
    }
    if (j.contains("norm_constant")) model.norm_constant = j.at("norm_constant").get<double>();

    model.check_valid();
    return model;
}

inline void save_model(const DMKDEModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << model_to_json(model).dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline DMKDEModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed model file: " + e.what());
    }
}

} // namespace memoqcd
