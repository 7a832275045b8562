#include "bpr/serialize.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "bpr/error.hpp"

namespace bpr {

using nlohmann::json;

namespace {

json to_json(const EmbeddingSpec& e) {
    return {{"mode", to_string(e.mode)}, {"degree", e.degree}, {"groups", e.groups}, {"intercept", e.include_intercept}};
}

EmbeddingSpec embedding_from(const json& j) {
    EmbeddingSpec e;
    e.mode = parse_embedding_mode(j.at("mode").get<std::string>());
    e.degree = j.at("degree").get<int>();
    e.groups = j.at("groups").get<FeatureGroups>();
    e.include_intercept = j.at("intercept").get<bool>();
    return e;
}

json to_json(const SgdConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"schedule", to_string(c.schedule)}, {"epochs", c.epochs},
            {"batch_size", c.batch_size},       {"seed", c.seed},                    {"ridge_lambda", c.ridge_lambda},
            {"standardize", c.standardize},     {"fit_intercept", c.fit_intercept},  {"positive_weight", c.positive_weight}};
}

SgdConfig sgd_from(const json& j) {
    SgdConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.schedule = parse_schedule(j.at("schedule").get<std::string>());
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.ridge_lambda = j.at("ridge_lambda").get<double>();
    c.standardize = j.at("standardize").get<bool>();
    c.fit_intercept = j.at("fit_intercept").get<bool>();
    c.positive_weight = j.at("positive_weight").get<double>();
    return c;
}

json to_json(const BprParams& p) {
    json j = {{"degree", p.degree},
              {"features_per_model", p.features_per_model},
              {"num_models", p.num_models},
              {"sample_size", nullptr},
              {"ridge_lambda", p.ridge_lambda},
              {"embedding_mode", to_string(p.embedding_mode)},
              {"task", to_string(p.task)},
              {"master_seed", p.master_seed},
              {"bootstrap", p.bootstrap},
              {"sgd", to_json(p.sgd)}};
    if (p.sample_size) j["sample_size"] = *p.sample_size;
    return j;
}

BprParams params_from(const json& j) {
    BprParams p;
    p.degree = j.at("degree").get<int>();
    p.features_per_model = j.at("features_per_model").get<std::size_t>();
    p.num_models = j.at("num_models").get<std::size_t>();
    if (!j.at("sample_size").is_null()) p.sample_size = j.at("sample_size").get<std::size_t>();
    p.ridge_lambda = j.at("ridge_lambda").get<double>();
    p.embedding_mode = parse_embedding_mode(j.at("embedding_mode").get<std::string>());
    p.task = parse_task(j.at("task").get<std::string>());
    p.master_seed = j.at("master_seed").get<std::uint64_t>();
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.sgd = sgd_from(j.at("sgd"));
    return p;
}

json to_json(const LinearSubModel& s, const SubModelProvenance& prov) {
    json j = {{"task", to_string(s.task)},
              {"features", s.feature_subset},
              {"weights", s.weights},
              {"intercept", s.intercept},
              {"scaler", nullptr},
              {"embedding", nullptr},
              {"epoch_loss", s.trace.epoch_loss},
              {"single_class", s.trace.single_class},
              {"model_seed", prov.model_seed},
              {"sgd_seed", prov.sgd_seed},
              {"sample_size", prov.sample_size},
              {"all_rows", prov.all_rows}};
    if (s.scaler) j["scaler"] = {{"mean", s.scaler->mean}, {"scale", s.scaler->scale}};
    if (s.embedding) j["embedding"] = to_json(*s.embedding);
    if (!prov.all_rows) j["sample_indices"] = prov.sample_indices;
    return j;
}

void sub_model_from(const json& j, LinearSubModel& s, SubModelProvenance& prov) {
    s.task = parse_task(j.at("task").get<std::string>());
    s.feature_subset = j.at("features").get<std::vector<std::size_t>>();
    s.weights = j.at("weights").get<std::vector<double>>();
    s.intercept = j.at("intercept").get<double>();
    if (!j.at("scaler").is_null())
        s.scaler = Standardizer{j["scaler"].at("mean").get<std::vector<double>>(),
                                j["scaler"].at("scale").get<std::vector<double>>()};
    if (!j.at("embedding").is_null()) s.embedding = embedding_from(j["embedding"]);
    s.trace.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    s.trace.single_class = j.at("single_class").get<bool>();
    prov.model_seed = j.at("model_seed").get<std::uint64_t>();
    prov.sgd_seed = j.at("sgd_seed").get<std::uint64_t>();
    prov.sample_size = j.at("sample_size").get<std::size_t>();
    prov.all_rows = j.at("all_rows").get<bool>();
    if (!prov.all_rows) prov.sample_indices = j.at("sample_indices").get<std::vector<std::size_t>>();
}

json to_json(const BprModel& m) {
    json subs = json::array();
    for (std::size_t i = 0; i < m.sub_models.size(); ++i) subs.push_back(to_json(m.sub_models[i], m.provenance[i]));
    return {{"params", to_json(m.params)},
            {"aggregation", to_string(m.aggregation)},
            {"input_dim", m.input_dim},
            {"sub_models", std::move(subs)}};
}

BprModel bpr_from(const json& j) {
    BprModel m;
    m.params = params_from(j.at("params"));
    m.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    m.input_dim = j.at("input_dim").get<std::size_t>();
    const auto& subs = j.at("sub_models");
    m.sub_models.resize(subs.size());
    m.provenance.resize(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) sub_model_from(subs[i], m.sub_models[i], m.provenance[i]);
    m.validate();
    return m;
}

}  // namespace

std::string model_to_json(const AnyModel& model, int indent) {
    json j = {{"format", "bpr-model"}, {"format_version", kModelFormatVersion}};
    if (const auto* b = std::get_if<BprModel>(&model)) {
        j["kind"] = "bpr";
        j["model"] = to_json(*b);
    } else {
        const auto& o = std::get<OvrModel>(model);
        json classes = json::array();
        for (const auto& [label, m] : o.class_models) classes.push_back({{"label", label}, {"model", to_json(m)}});
        j["kind"] = "ovr";
        j["classes"] = std::move(classes);
    }
    return j.dump(indent);
}

AnyModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "bpr-model") throw ValidationError("not a model file (missing format tag)");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw ValidationError("unsupported model format_version " + std::to_string(version) + " (expected " +
                                  std::to_string(kModelFormatVersion) + ")");
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "bpr") return bpr_from(j.at("model"));
        if (kind != "ovr") throw ValidationError("unknown model kind '" + kind + "'");
        OvrModel o;
        for (const auto& c : j.at("classes")) o.class_models.emplace_back(c.at("label").get<int>(), bpr_from(c.at("model")));
        require(!o.class_models.empty(), "one-vs-rest model has no classes");
        return o;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out << model_to_json(model) << '\n';
    if (!out) throw IoError("failed writing model file '" + path.string() + "'");
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace bpr
