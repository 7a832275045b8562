#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "bpr/bagging.hpp"
#include "bpr/cv.hpp"
#include "bpr/data.hpp"
#include "bpr/error.hpp"
#include "bpr/rates.hpp"
#include "bpr/serialize.hpp"
#include "bpr/text.hpp"

namespace bpr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string quote_if_needed(const std::string& s) {
    const bool plain = !s.empty() && s.find_first_of(" \t\"'#;=[]") == std::string::npos;
    return plain ? s : "\"" + s + "\"";
}

std::string show(const std::string& v) { return quote_if_needed(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(double v) { return format_double(v); }
template <class T>
    requires std::is_integral_v<T>
std::string show(T v) {
    return std::to_string(v);
}

/// Options of one subcommand, remembered in declaration order so the fully
/// resolved values can be written back as an INI section.
class Section {
public:
    Section(CLI::App* app, std::string name) : app_(app), name_(std::move(name)) {}

    template <class T>
    CLI::Option* option(const std::string& key, T& var, const std::string& help) {
        entries_.emplace_back(key, [&var] { return show(var); });
        return app_->add_option("--" + key, var, help)->capture_default_str();
    }

    CLI::Option* flag(const std::string& key, bool& var, const std::string& help) {
        entries_.emplace_back(key, [&var] { return show(var); });
        return app_->add_flag("--" + key, var, help);
    }

    std::string resolved() const {
        std::string out = "[" + name_ + "]\n";
        for (const auto& [key, get] : entries_) out += key + " = " + get() + "\n";
        return out;
    }

    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::string name_;
    std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

struct Common {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string out_dir = ".";
};

void add_common(Section& s, Common& c) {
    s.option("seed", c.seed, "master seed");
    s.option("workers", c.workers, "worker threads for parallel sub-model training");
    s.option("out-dir", c.out_dir, "output directory (created if missing; its parent must exist)");
}

struct DataArgs {
    std::string images;
    std::string labels;
    std::string csv;
    std::size_t limit = 0;  // 0 keeps every row
};

void add_data(Section& s, DataArgs& d, const std::string& prefix = "") {
    s.option(prefix + "images", d.images, "IDX image file");
    s.option(prefix + "labels", d.labels, "IDX label file");
    s.option(prefix + "csv", d.csv, "CSV file (last column is the target)");
    s.option(prefix + "limit", d.limit, "use only the first N rows (0 = all)");
}

Dataset load_data(const DataArgs& d, bool integer_labels, const std::string& what) {
    Dataset data;
    if (!d.csv.empty()) {
        require(d.images.empty() && d.labels.empty(), what + ": give either --csv or --images/--labels, not both");
        data = read_csv(d.csv, integer_labels);
    } else {
        require(!d.images.empty() && !d.labels.empty(), what + ": --images and --labels (or --csv) are required");
        data = load_idx(d.images, d.labels);
    }
    if (d.limit > 0 && d.limit < data.rows()) {
        std::vector<std::size_t> rows(d.limit);
        for (std::size_t i = 0; i < d.limit; ++i) rows[i] = i;
        data = data.subset(rows);
    }
    return data;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    if (!fs::exists(p)) {
        const fs::path parent = fs::absolute(p).parent_path();
        if (!fs::is_directory(parent))
            throw IoError("output directory parent '" + parent.string() + "' does not exist");
        fs::create_directory(p);
    }
    if (!fs::is_directory(p)) throw IoError("output path '" + p.string() + "' is not a directory");
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <class F>
void write_stream(const fs::path& path, F&& body) {
    std::ostringstream buf;
    body(buf);
    write_text(path, buf.str());
}

// ---- model hyper-parameters shared by train and tune ----

struct ModelArgs {
    std::string task = "regression";  // regression | binary | multiclass
    int positive_label = 1;
    int degree = 2;
    std::size_t features = 1;
    std::size_t models = 1;
    std::string sample_size = "all";
    double lambda = 0.0;
    std::string embedding = "total_degree";
    bool bootstrap = false;
    double learning_rate = 0.01;
    std::string schedule = "inverse_decay";
    int epochs = 50;
    std::size_t batch_size = 32;
    bool no_standardize = false;
    double positive_weight = 1.0;
};

void add_model(Section& s, ModelArgs& m, bool grid) {
    s.option("task", m.task, "regression, binary or multiclass")
        ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
    s.option("positive-label", m.positive_label, "label mapped to 1 for binary tasks on multi-label data");
    if (!grid) {
        s.option("degree", m.degree, "polynomial degree J");
        s.option("features", m.features, "features per sub-model F");
        s.option("models", m.models, "number of sub-models M");
        s.option("sample-size", m.sample_size, "rows per sub-model S, or 'all'");
        s.option("lambda", m.lambda, "ridge penalty");
    }
    s.option("embedding", m.embedding, "tensor_product, total_degree or partitioned");
    s.flag("bootstrap", m.bootstrap, "draw S = n rows with replacement");
    s.option("learning-rate", m.learning_rate, "SGD step size");
    s.option("schedule", m.schedule, "constant or inverse_decay");
    s.option("epochs", m.epochs, "SGD epochs");
    s.option("batch-size", m.batch_size, "SGD mini-batch size");
    s.flag("no-standardize", m.no_standardize, "skip feature standardization");
    s.option("positive-weight", m.positive_weight, "logistic weight on label-1 rows");
}

std::optional<std::size_t> parse_sample(const std::string& text) {
    if (text == "all") return std::nullopt;
    const long long v = parse_int(text);
    require(v >= 1, "sample size must be positive or 'all'");
    return static_cast<std::size_t>(v);
}

BprParams to_params(const ModelArgs& m, std::uint64_t seed) {
    BprParams p;
    p.degree = m.degree;
    p.features_per_model = m.features;
    p.num_models = m.models;
    p.sample_size = parse_sample(m.sample_size);
    p.ridge_lambda = m.lambda;
    p.embedding_mode = parse_embedding_mode(m.embedding);
    p.task = m.task == "regression" ? Task::Regression : Task::BinaryClassification;
    p.master_seed = seed;
    p.bootstrap = m.bootstrap;
    p.sgd.learning_rate = m.learning_rate;
    p.sgd.schedule = parse_schedule(m.schedule);
    p.sgd.epochs = m.epochs;
    p.sgd.batch_size = m.batch_size;
    p.sgd.standardize = !m.no_standardize;
    p.sgd.positive_weight = m.positive_weight;
    return p;
}

Dataset prepare_task_data(Dataset data, const ModelArgs& m) {
    if (m.task == "binary") {
        const auto labels = data.label_set();
        const bool already = std::all_of(labels.begin(), labels.end(), [](int c) { return c == 0 || c == 1; });
        if (!already) data = binarize(data, m.positive_label);
    }
    return data;
}

json sub_model_record(const BprModel& model, std::size_t m) {
    const auto& s = model.sub_models[m];
    return {{"index", m},
            {"features", s.feature_subset},
            {"parameters", s.width() + 1},
            {"epoch_loss", s.trace.epoch_loss},
            {"single_class", s.trace.single_class}};
}

// ---- commands ----

struct TrainCmd {
    Common common;
    DataArgs data;
    ModelArgs model;
};

int run_train(const TrainCmd& c, const Section& section, std::ostream& out) {
    const fs::path dir = prepare_out_dir(c.common.out_dir);
    Dataset data = load_data(c.data, c.model.task != "regression", "train");
    data = prepare_task_data(std::move(data), c.model);
    const BprParams params = to_params(c.model, c.common.seed);
    const TrainOptions options{c.common.workers};

    const auto start = std::chrono::steady_clock::now();
    AnyModel model;
    json report = {{"command", "train"},
                   {"task", c.model.task},
                   {"rows", data.rows()},
                   {"input_dim", data.cols()},
                   {"parameters_per_model", params.parameters_per_model()}};
    if (c.model.task == "multiclass") {
        auto ovr = train_ovr(data, params, options);
        json classes = json::array();
        for (const auto& [label, m] : ovr.class_models) {
            json subs = json::array();
            for (std::size_t i = 0; i < m.sub_models.size(); ++i) subs.push_back(sub_model_record(m, i));
            classes.push_back({{"label", label}, {"parameter_count", m.parameter_count()}, {"sub_models", subs}});
        }
        report["parameter_count"] = ovr.parameter_count();
        report["classes"] = classes;
        model = std::move(ovr);
    } else {
        auto bpr = train_bpr(data, params, options);
        json subs = json::array();
        for (std::size_t i = 0; i < bpr.sub_models.size(); ++i) subs.push_back(sub_model_record(bpr, i));
        report["parameter_count"] = bpr.parameter_count();
        report["sub_models"] = subs;
        model = std::move(bpr);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report["nondeterministic"] = {{"wall_time_seconds", seconds}};

    save_model(dir / "model.json", model);
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "resolved_config.ini", section.resolved());
    out << "model: " << (dir / "model.json").string() << "\n";
    out << "parameter_count: " << report["parameter_count"].get<std::size_t>() << "\n";
    return 0;
}

struct PredictCmd {
    Common common;
    DataArgs data;
    std::string model;
};

struct Scored {
    std::vector<double> values;  // regression predictions or hard labels
    Matrix scores;               // per-class scores (classification)
    std::vector<int> labels;     // score column labels
    bool classification = false;
    std::size_t ties = 0;
};

Scored score(const AnyModel& model, const Matrix& features, std::size_t workers) {
    Scored s;
    if (const auto* ovr = std::get_if<OvrModel>(&model)) {
        auto pred = predict_ovr(*ovr, features, workers);
        s.classification = true;
        s.labels = ovr->labels();
        s.scores = std::move(pred.scores);
        s.ties = pred.ties;
        for (int l : pred.labels) s.values.push_back(l);
        return s;
    }
    const auto& bpr = std::get<BprModel>(model);
    const auto raw = predict_bpr(bpr, features, workers);
    if (bpr.params.task == Task::Regression) {
        s.values = raw;
        return s;
    }
    s.classification = true;
    s.labels = {0, 1};
    s.scores = Matrix(raw.size(), 2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        s.scores(i, 0) = 1.0 - raw[i];
        s.scores(i, 1) = raw[i];
        s.values.push_back(raw[i] > 0.5 ? 1 : 0);
    }
    return s;
}

bool model_is_regression(const AnyModel& model) {
    const auto* b = std::get_if<BprModel>(&model);
    return b && b->params.task == Task::Regression;
}

int run_predict(const PredictCmd& c, const Section& section, std::ostream& out) {
    const fs::path dir = prepare_out_dir(c.common.out_dir);
    const AnyModel model = load_model(c.model);
    const Dataset data = load_data(c.data, !model_is_regression(model), "predict");
    const Scored s = score(model, data.features, c.common.workers);
    write_stream(dir / "predictions.csv", [&](std::ostream& o) {
        o << "row,prediction";
        if (s.classification)
            for (int l : s.labels) o << ",score_" << l;
        o << '\n';
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            o << i << ',' << (s.classification ? std::to_string(static_cast<int>(s.values[i])) : format_double(s.values[i]));
            if (s.classification)
                for (std::size_t k = 0; k < s.labels.size(); ++k) o << ',' << format_double(s.scores(i, k));
            o << '\n';
        }
    });
    write_text(dir / "resolved_config.ini", section.resolved());
    out << "predictions: " << (dir / "predictions.csv").string() << " (" << s.values.size() << " rows)\n";
    return 0;
}

struct EvalCmd {
    Common common;
    DataArgs data;
    std::string model;
    int positive_label_value = -1;  // -1: labels used as given
};

json classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t ties) {
    std::set<int> label_set(truth.begin(), truth.end());
    label_set.insert(predicted.begin(), predicted.end());
    const std::vector<int> labels(label_set.begin(), label_set.end());
    std::map<int, std::size_t> pos;
    for (std::size_t k = 0; k < labels.size(); ++k) pos[labels[k]] = k;
    std::vector<std::vector<std::size_t>> confusion(labels.size(), std::vector<std::size_t>(labels.size(), 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++confusion[pos[truth[i]]][pos[predicted[i]]];
        correct += truth[i] == predicted[i];
    }
    json per_class = json::array();
    for (std::size_t k = 0; k < labels.size(); ++k) {
        std::size_t support = 0;
        std::size_t predicted_k = 0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            support += confusion[k][j];
            predicted_k += confusion[j][k];
        }
        const std::size_t hit = confusion[k][k];
        per_class.push_back({{"label", labels[k]},
                             {"support", support},
                             {"correct", hit},
                             {"recall", support ? static_cast<double>(hit) / static_cast<double>(support) : 0.0},
                             {"precision",
                              predicted_k ? static_cast<double>(hit) / static_cast<double>(predicted_k) : 0.0}});
    }
    return {{"metric", "accuracy"},
            {"rows", truth.size()},
            {"accuracy", static_cast<double>(correct) / static_cast<double>(truth.size())},
            {"ties", ties},
            {"per_class", per_class},
            {"confusion_matrix", {{"labels", labels}, {"rows_true_cols_predicted", confusion}}}};
}

int run_eval(const EvalCmd& c, const Section& section, std::ostream& out) {
    const fs::path dir = prepare_out_dir(c.common.out_dir);
    const AnyModel model = load_model(c.model);
    const bool regression = model_is_regression(model);
    Dataset data = load_data(c.data, !regression, "eval");
    if (c.positive_label_value >= 0) data = binarize(data, c.positive_label_value);
    const Scored s = score(model, data.features, c.common.workers);

    json metrics;
    if (regression) {
        const auto y = data.target_values();
        double sse = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) sse += (s.values[i] - y[i]) * (s.values[i] - y[i]);
        const double mse = sse / static_cast<double>(y.size());
        metrics = {{"metric", "mse"}, {"rows", y.size()}, {"mse", mse}, {"rmse", std::sqrt(mse)}};
        out << "mse: " << format_double(mse) << "\n";
    } else {
        std::vector<int> predicted(s.values.begin(), s.values.end());
        metrics = classification_metrics(data.labels(), predicted, s.ties);
        out << "accuracy: " << format_double(metrics["accuracy"].get<double>()) << "\n";
    }
    write_text(dir / "metrics.json", metrics.dump(2) + "\n");
    write_text(dir / "resolved_config.ini", section.resolved());
    return 0;
}

struct TuneCmd {
    Common common;
    DataArgs data;
    ModelArgs model;
    std::string degrees = "2";
    std::string features = "1";
    std::string models = "1";
    std::string samples = "all";
    std::string lambdas = "0";
    std::size_t folds = 5;
    std::string metric = "auto";
};

template <class T, class F>
std::vector<T> parse_list(const std::string& text, F&& convert, const std::string& what) {
    std::vector<T> out;
    for (const auto& item : split(text, ',')) {
        const auto t = trim(item);
        if (t.empty()) continue;
        out.push_back(convert(std::string(t)));
    }
    require(!out.empty(), what + " grid is empty");
    return out;
}

int run_tune(const TuneCmd& c, const Section& section, std::ostream& out) {
    const fs::path dir = prepare_out_dir(c.common.out_dir);
    Dataset data = load_data(c.data, c.model.task != "regression", "tune");
    data = prepare_task_data(std::move(data), c.model);

    GridSpec grid;
    grid.degrees = parse_list<int>(c.degrees, [](const std::string& s) { return static_cast<int>(parse_int(s)); }, "degree");
    auto size_of = [](const std::string& s) {
        const long long v = parse_int(s);
        require(v >= 1, "grid values must be positive");
        return static_cast<std::size_t>(v);
    };
    grid.features = parse_list<std::size_t>(c.features, size_of, "features");
    grid.models = parse_list<std::size_t>(c.models, size_of, "models");
    grid.samples = parse_list<std::optional<std::size_t>>(c.samples, parse_sample, "sample-size");
    grid.lambdas = parse_list<double>(c.lambdas, [](const std::string& s) { return parse_double(s); }, "lambda");
    grid.folds = c.folds;
    grid.seed = c.common.seed;
    grid.metric = c.metric == "auto" ? (c.model.task == "regression" ? Metric::MSE : Metric::Accuracy)
                                     : parse_metric(c.metric);

    const BprParams base = to_params(c.model, c.common.seed);
    const auto result = grid_search(data, grid, base, c.common.workers);
    write_stream(dir / "grid_raw.csv", [&](std::ostream& o) { write_grid_raw_csv(o, result); });
    write_stream(dir / "grid_summary.csv", [&](std::ostream& o) { write_grid_summary_csv(o, result); });
    write_text(dir / "resolved_config.ini", section.resolved());
    if (!result.best) throw NumericalError("every grid cell failed; see grid_summary.csv");

    // The best cell as a [train] section, usable with `train --config`.
    const auto& b = *result.best;
    std::ostringstream best;
    best << "[train]\n"
         << "seed = " << c.common.seed << "\n"
         << "task = " << c.model.task << "\n"
         << "degree = " << b.degree << "\n"
         << "features = " << b.features_per_model << "\n"
         << "models = " << b.num_models << "\n"
         << "sample-size = " << (b.sample_size ? std::to_string(*b.sample_size) : "all") << "\n"
         << "lambda = " << format_double(b.ridge_lambda) << "\n"
         << "embedding = " << to_string(b.embedding_mode) << "\n"
         << "learning-rate = " << format_double(b.sgd.learning_rate) << "\n"
         << "schedule = " << to_string(b.sgd.schedule) << "\n"
         << "epochs = " << b.sgd.epochs << "\n"
         << "batch-size = " << b.sgd.batch_size << "\n";
    write_text(dir / "best_params.ini", best.str());
    const auto& cell = result.cells[result.ranking.front()];
    out << "best: J=" << b.degree << " F=" << b.features_per_model << " M=" << b.num_models
        << " S=" << (b.sample_size ? std::to_string(*b.sample_size) : "all") << " lambda=" << format_double(b.ridge_lambda)
        << " " << to_string(grid.metric) << "=" << format_double(cell.mean) << "\n";
    return 0;
}

struct RatesCmd {
    Common common;
    std::string panel = "a";
    std::string xs;
    std::string series;
    double n = 0.0;
    std::size_t d = 0;
    int J = 0;
    double s = 0.0;
    double t = 0.0;
    std::size_t B = 1;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t t_points = 0;
    std::size_t d_lo = 0;
    std::size_t d_hi = 0;
    bool coarsen = false;
};

int run_rates_point(const RatesCmd& c, const fs::path& dir, std::ostream& out) {
    rates::RateParams p{c.n > 0 ? c.n : 1e7, c.d ? c.d : 40, c.J ? c.J : 3, c.s > 0 ? c.s : 5.0, c.t > 0 ? c.t : 0.05,
                        c.B};
    const auto g = rates::rate_G(p, {c.coarsen});
    const double ck = rates::approx_bound_ck(p.d, p.J, p.s, p.B);
    json j = {{"n", p.n},
              {"d", p.d},
              {"J", p.J},
              {"s", p.s},
              {"t", p.t},
              {"B", p.B},
              {"c_k", ck},
              {"G", {{"term1", g.term1}, {"term2", g.term2}, {"term3", g.term3}, {"total", g.total},
                     {"feasible", g.feasible}, {"saturated", g.saturated}}}};
    try {
        const auto k = static_cast<double>(rates::partitioned_k(p.d, p.J, p.B));
        j["k"] = k;
        j["asymptotic_rate"] = rates::asymptotic_rate(p.n, k, ck);
    } catch (const DimensionOverflow&) {
        j["k"] = nullptr;
    }
    try {
        const auto opt = rates::optimal_B(p.n, p.d, p.J, p.s, p.t);
        j["optimal_B"] = {{"b_star", opt.b_star},
                          {"brute_force_argmin", opt.brute_force_argmin},
                          {"feasible", opt.feasible},
                          {"g_at_b_star", opt.g_at_b_star},
                          {"g_min", opt.g_min}};
    } catch (const ValidationError& e) {
        j["optimal_B"] = {{"error", e.what()}};
    }
    write_text(dir / "rates_point.json", j.dump(2) + "\n");
    out << "G total: " << format_double(g.total) << "\n";
    return 0;
}

int run_rates(const RatesCmd& c, const Section& section, std::ostream& out) {
    const fs::path dir = prepare_out_dir(c.common.out_dir);
    write_text(dir / "resolved_config.ini", section.resolved());
    if (c.panel == "point") return run_rates_point(c, dir, out);

    auto config = rates::default_sweep(rates::parse_panel(c.panel));
    auto numbers = [](const std::string& s) { return parse_double(s); };
    if (!c.xs.empty()) config.xs = parse_list<double>(c.xs, numbers, "x");
    if (!c.series.empty()) config.series = parse_list<double>(c.series, numbers, "series");
    if (c.n > 0) config.n = c.n;
    if (c.d > 0) config.d = c.d;
    if (c.J > 0) config.J = c.J;
    if (c.s > 0) config.s = c.s;
    if (c.t > 0) config.t = c.t;
    if (c.t_lo > 0) config.t_lo = c.t_lo;
    if (c.t_hi > 0) config.t_hi = c.t_hi;
    if (c.t_points > 0) config.t_points = c.t_points;
    if (c.d_lo > 0) config.d_lo = c.d_lo;
    if (c.d_hi > 0) config.d_hi = c.d_hi;
    config.coarsen_group_size = c.coarsen;
    const auto rows = rates::sweep(config);
    const fs::path file = dir / ("rates_" + rates::to_string(config.panel) + ".csv");
    write_stream(file, [&](std::ostream& o) { rates::write_sweep_csv(o, rows); });
    out << "rates: " << file.string() << " (" << rows.size() << " rows)\n";
    return 0;
}

struct DataConvertCmd {
    Common common;
    DataArgs data;
};

struct DataSynthCmd {
    Common common;
    std::size_t n = 1000;
    std::size_t d = 4;
    std::string family = "additive_sine";
    double scale = 1.0;
    double sigma = 0.0;
};

struct DataSplitCmd {
    Common common;
    DataArgs data;
    bool integer_labels = false;
    double test_fraction = 0.2;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bagged polynomial regression", "bpr"};
    app.set_config("--config", "", "INI file; [command] sections hold option defaults, flags override");
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.require_subcommand(1);

    TrainCmd train;
    Section train_s(app.add_subcommand("train", "train a model and write model.json + report.json"), "train");
    add_common(train_s, train.common);
    add_data(train_s, train.data);
    add_model(train_s, train.model, false);

    PredictCmd predict;
    Section predict_s(app.add_subcommand("predict", "write predictions.csv for a dataset"), "predict");
    add_common(predict_s, predict.common);
    add_data(predict_s, predict.data);
    predict_s.option("model", predict.model, "model file")->required();

    EvalCmd eval;
    Section eval_s(app.add_subcommand("eval", "write metrics.json (accuracy + confusion matrix, or MSE)"), "eval");
    add_common(eval_s, eval.common);
    add_data(eval_s, eval.data);
    eval_s.option("model", eval.model, "model file")->required();
    eval_s.option("positive-label", eval.positive_label_value,
                  "binarize labels against this label before scoring (-1 = as given)");

    TuneCmd tune;
    Section tune_s(app.add_subcommand("tune", "k-fold grid search over J, F, M, S, lambda"), "tune");
    add_common(tune_s, tune.common);
    add_data(tune_s, tune.data);
    add_model(tune_s, tune.model, true);
    tune_s.option("degrees", tune.degrees, "comma-separated J candidates");
    tune_s.option("features-grid", tune.features, "comma-separated F candidates");
    tune_s.option("models-grid", tune.models, "comma-separated M candidates");
    tune_s.option("samples-grid", tune.samples, "comma-separated S candidates ('all' allowed)");
    tune_s.option("lambdas", tune.lambdas, "comma-separated lambda candidates");
    tune_s.option("folds", tune.folds, "number of folds");
    tune_s.option("metric", tune.metric, "auto, accuracy or mse")->check(CLI::IsMember({"auto", "accuracy", "mse"}));

    RatesCmd rates_cmd;
    Section rates_s(app.add_subcommand("rates", "rate sweeps (panels a-d) or a single point"), "rates");
    add_common(rates_s, rates_cmd.common);
    rates_s.option("panel", rates_cmd.panel, "a, b, c, d or point")
        ->check(CLI::IsMember({"a", "b", "c", "d", "point"}));
    rates_s.option("xs", rates_cmd.xs, "comma-separated x grid (panel default when empty)");
    rates_s.option("series", rates_cmd.series, "comma-separated series values (panel default when empty)");
    rates_s.option("n", rates_cmd.n, "sample size (0 = panel default)");
    rates_s.option("d", rates_cmd.d, "dimension (0 = panel default)");
    rates_s.option("J", rates_cmd.J, "degree (0 = panel default)");
    rates_s.option("s", rates_cmd.s, "smoothness (0 = panel default)");
    rates_s.option("t", rates_cmd.t, "tolerance (0 = panel default)");
    rates_s.option("B", rates_cmd.B, "partition count (point mode)");
    rates_s.option("t-lo", rates_cmd.t_lo, "tolerance band low end (0 = default)");
    rates_s.option("t-hi", rates_cmd.t_hi, "tolerance band high end (0 = default)");
    rates_s.option("t-points", rates_cmd.t_points, "tolerance band points (0 = default)");
    rates_s.option("d-lo", rates_cmd.d_lo, "dimension band low end (0 = default)");
    rates_s.option("d-hi", rates_cmd.d_hi, "dimension band high end (0 = default)");
    rates_s.flag("coarsen", rates_cmd.coarsen, "use integer group sizes d/ceil(d/B)");

    auto* data_app = app.add_subcommand("data", "dataset utilities");
    data_app->require_subcommand(1);
    DataConvertCmd convert;
    Section convert_s(data_app->add_subcommand("convert", "IDX (or CSV) to CSV: data.csv"), "data.convert");
    add_common(convert_s, convert.common);
    add_data(convert_s, convert.data);
    DataSynthCmd synth_cmd;
    Section synth_s(data_app->add_subcommand("synth", "synthetic regression data: synth.csv"), "data.synth");
    add_common(synth_s, synth_cmd.common);
    synth_s.option("n", synth_cmd.n, "rows");
    synth_s.option("d", synth_cmd.d, "features");
    synth_s.option("family", synth_cmd.family, "additive_sine, product_cosine or polynomial_truth");
    synth_s.option("scale", synth_cmd.scale, "frequency multiplier of the trigonometric families");
    synth_s.option("sigma", synth_cmd.sigma, "Gaussian noise standard deviation");
    DataSplitCmd split_cmd;
    Section split_s(data_app->add_subcommand("split", "seeded train/test split: train.csv, test.csv"), "data.split");
    add_common(split_s, split_cmd.common);
    add_data(split_s, split_cmd.data);
    split_s.flag("integer-labels", split_cmd.integer_labels, "CSV target column holds class labels");
    split_s.option("test-fraction", split_cmd.test_fraction, "fraction of rows in the test part");

    auto fail = [&](const std::string& category, std::string message, int code) {
        std::replace(message.begin(), message.end(), '\n', ' ');
        err << "error: category=" << category << " message=" << message << "\n";
        return code;
    };

    try {
        // --config belongs to the root app but is accepted anywhere on the line.
        std::vector<std::string> ordered;
        std::vector<std::string> rest;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                ordered.push_back(args[i]);
                ordered.push_back(args[++i]);
            } else if (args[i].rfind("--config=", 0) == 0) {
                ordered.push_back(args[i]);
            } else {
                rest.push_back(args[i]);
            }
        }
        ordered.insert(ordered.end(), rest.begin(), rest.end());
        std::vector<std::string> reversed(ordered.rbegin(), ordered.rend());
        app.parse(reversed);

        if (train_s.app()->parsed()) return run_train(train, train_s, out);
        if (predict_s.app()->parsed()) return run_predict(predict, predict_s, out);
        if (eval_s.app()->parsed()) return run_eval(eval, eval_s, out);
        if (tune_s.app()->parsed()) return run_tune(tune, tune_s, out);
        if (rates_s.app()->parsed()) return run_rates(rates_cmd, rates_s, out);
        if (convert_s.app()->parsed()) {
            const fs::path dir = prepare_out_dir(convert.common.out_dir);
            const Dataset d = load_data(convert.data, true, "data convert");
            write_csv(dir / "data.csv", d);
            write_text(dir / "resolved_config.ini", convert_s.resolved());
            out << "data: " << (dir / "data.csv").string() << " (" << d.rows() << " rows)\n";
            return 0;
        }
        if (synth_s.app()->parsed()) {
            const fs::path dir = prepare_out_dir(synth_cmd.common.out_dir);
            const auto s = synth({synth_cmd.n, synth_cmd.d, parse_target_family(synth_cmd.family), synth_cmd.scale,
                                  synth_cmd.sigma, synth_cmd.common.seed});
            write_csv(dir / "synth.csv", s.data);
            write_text(dir / "resolved_config.ini", synth_s.resolved());
            out << "data: " << (dir / "synth.csv").string() << " (" << s.data.rows() << " rows)\n";
            return 0;
        }
        if (split_s.app()->parsed()) {
            const fs::path dir = prepare_out_dir(split_cmd.common.out_dir);
            const Dataset d = load_data(split_cmd.data, split_cmd.integer_labels || split_cmd.data.csv.empty(),
                                        "data split");
            const auto [tr, te] = split(d, split_cmd.test_fraction, split_cmd.common.seed);
            write_csv(dir / "train.csv", tr);
            write_csv(dir / "test.csv", te);
            write_text(dir / "resolved_config.ini", split_s.resolved());
            out << "split: " << tr.rows() << " train rows, " << te.rows() << " test rows\n";
            return 0;
        }
        return fail("validation", "no command given", 3);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::FileError& e) {
        return fail("io", e.what(), 2);
    } catch (const CLI::ParseError& e) {
        return fail("validation", e.what(), 3);
    } catch (const Error& e) {
        return fail(std::string(category_name(e.category())), e.what(), exit_code(e.category()));
    } catch (const fs::filesystem_error& e) {
        return fail("io", e.what(), 2);
    }
}

}  // namespace bpr::cli
