#include "bpr/bagging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bpr/error.hpp"
#include "bpr/parallel.hpp"
#include "bpr/rng.hpp"

namespace bpr {

namespace {

/// Embedded rows of a column slice of the raw data, produced on demand.
class EmbeddedRows final : public RowSource {
public:
    EmbeddedRows(const Matrix& raw, std::span<const std::size_t> rows, bool all_rows,
                 std::span<const std::size_t> columns, const PolynomialEmbedder& embedder)
        : raw_(raw), rows_(rows), all_rows_(all_rows), columns_(columns), embedder_(embedder), slice_(columns.size()),
          scratch_(embedder.output_dim()) {}

    std::size_t rows() const override { return all_rows_ ? raw_.rows() : rows_.size(); }
    std::size_t cols() const override { return embedder_.output_dim(); }
    void fill_row(std::size_t i, std::span<double> out) const override {
        auto src = raw_.row(all_rows_ ? i : rows_[i]);
        for (std::size_t j = 0; j < columns_.size(); ++j) slice_[j] = src[columns_[j]];
        embedder_.embed(slice_, out);
    }
    void fill_sparse(std::size_t i, SparseRow& out) const override {
        auto src = raw_.row(all_rows_ ? i : rows_[i]);
        for (std::size_t j = 0; j < columns_.size(); ++j) slice_[j] = src[columns_[j]];
        embedder_.embed_sparse(slice_, scratch_, out);
    }

private:
    const Matrix& raw_;
    std::span<const std::size_t> rows_;
    bool all_rows_;
    std::span<const std::size_t> columns_;
    const PolynomialEmbedder& embedder_;
    mutable std::vector<double> slice_;
    mutable std::vector<double> scratch_;
};

std::vector<double> binary_targets(const Dataset& data) {
    auto y = data.target_values();
    for (double v : y)
        if (v != 0.0 && v != 1.0) throw ValidationError("binary classification needs 0/1 targets");
    return y;
}

}  // namespace

std::string to_string(Aggregation aggregation) {
    return aggregation == Aggregation::Mean ? "mean" : "median_prob";
}

Aggregation parse_aggregation(const std::string& text) {
    if (text == "mean") return Aggregation::Mean;
    if (text == "median_prob") return Aggregation::MedianProb;
    throw ValidationError("unknown aggregation '" + text + "'");
}

void BprParams::validate(std::size_t n, std::size_t d) const {
    require(degree >= 1, "degree J must be at least 1");
    require(num_models >= 1, "number of models M must be at least 1");
    require(features_per_model >= 1, "features per model F must be at least 1");
    require(features_per_model <= d, "features per model F=" + std::to_string(features_per_model) +
                                         " exceeds the " + std::to_string(d) + " available features");
    require(n >= 1, "training data is empty");
    if (sample_size) {
        require(*sample_size >= 1, "sample size S must be at least 1");
        require(*sample_size <= n, "sample size S=" + std::to_string(*sample_size) + " exceeds the " +
                                       std::to_string(n) + " available rows");
    }
    require(!bootstrap || resolved_sample_size(n) == n, "bootstrap sampling requires S = n");
    require(ridge_lambda >= 0.0 && std::isfinite(ridge_lambda), "ridge lambda must be non-negative");
    sgd.validate();
}

EmbeddingSpec BprParams::sub_model_embedding() const {
    EmbeddingSpec spec;
    spec.mode = embedding_mode;
    spec.degree = degree;
    spec.include_intercept = false;
    if (embedding_mode == EmbeddingMode::Partitioned) {
        std::vector<std::size_t> all(features_per_model);
        std::iota(all.begin(), all.end(), std::size_t{0});
        spec.groups = {all};
    }
    return spec;
}

std::size_t BprParams::parameters_per_model() const {
    return static_cast<std::size_t>(embed_dim(sub_model_embedding(), features_per_model)) + 1;
}

std::size_t BprModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& s : sub_models) total += s.width() + 1;
    return total;
}

void BprModel::validate() const {
    require(sub_models.size() == params.num_models, "model holds " + std::to_string(sub_models.size()) +
                                                        " sub-models, expected M=" + std::to_string(params.num_models));
    require(provenance.size() == sub_models.size(), "provenance count does not match sub-models");
    for (std::size_t m = 0; m < sub_models.size(); ++m) {
        const auto& s = sub_models[m];
        require(s.feature_subset.size() == params.features_per_model, "sub-model feature subset has the wrong size");
        auto sorted = s.feature_subset;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                "sub-model feature subset repeats an index");
        require(sorted.empty() || sorted.back() < input_dim, "sub-model feature index out of range");
        require(s.embedding.has_value(), "sub-model lacks its embedding spec");
        s.validate();
        const auto& p = provenance[m];
        require(p.all_rows || p.sample_indices.size() == p.sample_size, "sub-model sample record has the wrong size");
    }
}

std::uint64_t sub_model_seed(std::uint64_t master_seed, std::size_t m) { return derive_seed(master_seed, m); }

std::uint64_t sub_model_sgd_seed(std::uint64_t model_seed) { return derive_seed(model_seed, 0x5eed); }

SubModelDraw draw_sub_model(const BprParams& params, std::size_t m, std::size_t n, std::size_t d) {
    Rng rng(sub_model_seed(params.master_seed, m));
    SubModelDraw draw;
    draw.features = rng.sample_without_replacement(d, params.features_per_model);
    std::sort(draw.features.begin(), draw.features.end());
    const std::size_t s = params.resolved_sample_size(n);
    if (params.bootstrap) {
        draw.all_rows = false;
        draw.rows.resize(s);
        for (auto& r : draw.rows) r = rng.uniform_index(n);
        std::sort(draw.rows.begin(), draw.rows.end());
    } else if (s < n) {
        draw.all_rows = false;
        draw.rows = rng.sample_without_replacement(n, s);
        std::sort(draw.rows.begin(), draw.rows.end());
    }
    return draw;
}

BprModel train_bpr(const Dataset& data, const BprParams& params, const TrainOptions& options) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    params.validate(n, d);
    const std::vector<double> targets =
        params.task == Task::BinaryClassification ? binary_targets(data) : data.target_values();
    for (double v : targets)
        if (!std::isfinite(v)) throw ValidationError("non-finite target value");

    const EmbeddingSpec spec = params.sub_model_embedding();
    const PolynomialEmbedder embedder(spec, params.features_per_model);

    BprModel model;
    model.params = params;
    model.input_dim = d;
    model.aggregation = params.task == Task::Regression ? Aggregation::Mean : Aggregation::MedianProb;
    model.sub_models.resize(params.num_models);
    model.provenance.resize(params.num_models);

    parallel_for(params.num_models, options.workers, [&](std::size_t m) {
        const SubModelDraw draw = draw_sub_model(params, m, n, d);
        SubModelProvenance prov;
        prov.model_seed = sub_model_seed(params.master_seed, m);
        prov.sgd_seed = sub_model_sgd_seed(prov.model_seed);
        prov.sample_size = params.resolved_sample_size(n);
        prov.all_rows = draw.all_rows;
        prov.sample_indices = draw.rows;

        SgdConfig sgd = params.sgd;
        sgd.seed = prov.sgd_seed;
        sgd.ridge_lambda = params.ridge_lambda;

        std::vector<double> y;
        if (draw.all_rows) {
            y = targets;
        } else {
            y.reserve(draw.rows.size());
            for (auto r : draw.rows) y.push_back(targets[r]);
        }
        EmbeddedRows rows(data.features, draw.rows, draw.all_rows, draw.features, embedder);
        LinearSubModel sub;
        try {
            sub = params.task == Task::Regression ? fit_ridge_sgd(rows, y, sgd) : fit_logistic_sgd(rows, y, sgd);
        } catch (const DivergenceError& e) {
            throw DivergenceError("sub-model " + std::to_string(m) + ": " + e.what(), e.epoch());
        } catch (const Error& e) {
            throw Error(e.category(), "sub-model " + std::to_string(m) + ": " + e.what());
        }
        sub.embedding = spec;
        sub.feature_subset = draw.features;
        model.sub_models[m] = std::move(sub);
        model.provenance[m] = std::move(prov);
    });
    return model;
}

Matrix sub_model_outputs(const BprModel& model, const Matrix& features, std::size_t workers) {
    if (features.cols() != model.input_dim)
        throw ShapeError("feature width " + std::to_string(features.cols()) + " does not match the model's " +
                         std::to_string(model.input_dim));
    const std::size_t n = features.rows();
    const std::size_t count = model.sub_models.size();
    Matrix out(n, count);
    parallel_for(count, workers, [&](std::size_t m) {
        const auto& sub = model.sub_models[m];
        const PolynomialEmbedder embedder(*sub.embedding, sub.feature_subset.size());
        const auto folded = sub.fold();
        std::vector<double> slice(sub.feature_subset.size());
        std::vector<double> scratch(embedder.output_dim());
        SparseRow z;
        for (std::size_t i = 0; i < n; ++i) {
            auto src = features.row(i);
            for (std::size_t j = 0; j < slice.size(); ++j) slice[j] = src[sub.feature_subset[j]];
            embedder.embed_sparse(slice, scratch, z);
            const double margin = folded.linear(z);
            out(i, m) = model.aggregation == Aggregation::Mean ? margin : sigmoid(margin);
        }
    });
    return out;
}

double median(std::span<double> values) {
    if (values.empty()) throw ValidationError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return values[mid - 1] + (values[mid] - values[mid - 1]) / 2.0;
}

std::vector<double> predict_bpr(const BprModel& model, const Matrix& features, std::size_t workers) {
    const Matrix outputs = sub_model_outputs(model, features, workers);
    const std::size_t n = outputs.rows();
    const std::size_t count = outputs.cols();
    std::vector<double> result(n);
    std::vector<double> scratch(count);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = outputs.row(i);
        if (model.aggregation == Aggregation::Mean) {
            double s = 0.0;
            for (double v : row) s += v;
            result[i] = s / static_cast<double>(count);
        } else {
            std::copy(row.begin(), row.end(), scratch.begin());
            result[i] = median(scratch);
        }
    }
    return result;
}

std::vector<int> OvrModel::labels() const {
    std::vector<int> out;
    for (const auto& [label, model] : class_models) out.push_back(label);
    return out;
}

std::size_t OvrModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& [label, model] : class_models) total += model.parameter_count();
    return total;
}

OvrModel train_ovr(const Dataset& data, const BprParams& params, const TrainOptions& options,
                   std::optional<std::vector<int>> classes) {
    const auto present = data.label_set();
    std::vector<int> wanted = classes.value_or(present);
    std::sort(wanted.begin(), wanted.end());
    require(std::adjacent_find(wanted.begin(), wanted.end()) == wanted.end(), "class labels must be distinct");
    require(wanted.size() >= 2, "one-vs-rest needs at least two classes");
    for (int c : wanted)
        if (!std::binary_search(present.begin(), present.end(), c))
            throw ValidationError("class " + std::to_string(c) + " has no rows in the training data");

    OvrModel out;
    for (int c : wanted) {
        BprParams p = params;
        p.task = Task::BinaryClassification;
        p.master_seed = derive_seed(params.master_seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
        out.class_models.emplace_back(c, train_bpr(binarize(data, c), p, options));
    }
    return out;
}

OvrPrediction argmax_scores(const Matrix& scores, std::span<const int> labels) {
    if (scores.cols() != labels.size()) throw ShapeError("score columns do not match the label list");
    OvrPrediction out;
    out.labels.resize(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        std::size_t best = 0;
        bool tied = false;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) {
                best = c;
                tied = false;
            } else if (row[c] == row[best]) {
                tied = true;
            }
        }
        if (tied) ++out.ties;
        out.labels[i] = labels[best];
    }
    out.scores = scores;
    return out;
}

OvrPrediction predict_ovr(const OvrModel& model, const Matrix& features, std::size_t workers) {
    const std::size_t classes = model.class_models.size();
    if (classes == 0) throw ValidationError("one-vs-rest model has no classes");
    Matrix scores(features.rows(), classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const auto col = predict_bpr(model.class_models[c].second, features, workers);
        for (std::size_t i = 0; i < col.size(); ++i) scores(i, c) = col[i];
    }
    const auto labels = model.labels();
    return argmax_scores(scores, labels);
}

}  // namespace bpr
