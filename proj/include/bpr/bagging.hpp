#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bpr/data.hpp"
#include "bpr/embedding.hpp"
#include "bpr/linear_model.hpp"
#include "bpr/matrix.hpp"

namespace bpr {

enum class Aggregation { Mean, MedianProb };

std::string to_string(Aggregation aggregation);
Aggregation parse_aggregation(const std::string& text);

/// Bagged polynomial regression hyper-parameters.
struct BprParams {
    int degree = 2;                          // J
    std::size_t features_per_model = 1;      // F
    std::size_t num_models = 1;              // M
    std::optional<std::size_t> sample_size;  // S; unset means every row
    double ridge_lambda = 0.0;               // lambda
    EmbeddingMode embedding_mode = EmbeddingMode::TotalDegree;
    Task task = Task::Regression;
    std::uint64_t master_seed = 0;
    bool bootstrap = false;  // draw S = n rows with replacement
    SgdConfig sgd;           // seed and ridge_lambda are set per sub-model

    /// Throws unless usable on an n x d dataset.
    void validate(std::size_t n, std::size_t d) const;
    std::size_t resolved_sample_size(std::size_t n) const { return sample_size.value_or(n); }
    /// Embedding of one sub-model's F-column slice; the slice is a single group.
    EmbeddingSpec sub_model_embedding() const;
    /// embed_dim + 1 (intercept).
    std::size_t parameters_per_model() const;

    friend bool operator==(const BprParams&, const BprParams&) = default;
};

struct SubModelProvenance {
    std::uint64_t model_seed = 0;  // derive_seed(master_seed, m)
    std::uint64_t sgd_seed = 0;
    std::size_t sample_size = 0;
    bool all_rows = true;                     // N_m is every row in order
    std::vector<std::size_t> sample_indices;  // N_m when !all_rows

    friend bool operator==(const SubModelProvenance&, const SubModelProvenance&) = default;
};

struct BprModel {
    std::vector<LinearSubModel> sub_models;
    std::vector<SubModelProvenance> provenance;
    BprParams params;
    Aggregation aggregation = Aggregation::Mean;
    std::size_t input_dim = 0;

    std::size_t parameter_count() const;
    void validate() const;
    friend bool operator==(const BprModel&, const BprModel&) = default;
};

struct TrainOptions {
    std::size_t workers = 1;
};

/// Seeds used for sub-model m and for the SGD inside it.
std::uint64_t sub_model_seed(std::uint64_t master_seed, std::size_t m);
std::uint64_t sub_model_sgd_seed(std::uint64_t model_seed);

/// Feature subset F_m and observation sample N_m for sub-model m, both sorted.
struct SubModelDraw {
    std::vector<std::size_t> features;
    std::vector<std::size_t> rows;
    bool all_rows = true;
};
SubModelDraw draw_sub_model(const BprParams& params, std::size_t m, std::size_t n, std::size_t d);

BprModel train_bpr(const Dataset& data, const BprParams& params, const TrainOptions& options = {});

/// Raw per-sub-model outputs: linear predictions for regression, probabilities
/// for classification. Shape n x M.
Matrix sub_model_outputs(const BprModel& model, const Matrix& features, std::size_t workers = 1);

/// Regression: mean of the sub-model predictions (ascending model order).
/// Classification: per-row median probability, midpoint rule for even M.
std::vector<double> predict_bpr(const BprModel& model, const Matrix& features, std::size_t workers = 1);

double median(std::span<double> values);

/// One binary BPR per class label (label vs rest).
struct OvrModel {
    std::vector<std::pair<int, BprModel>> class_models;

    std::vector<int> labels() const;
    std::size_t parameter_count() const;
    friend bool operator==(const OvrModel&, const OvrModel&) = default;
};

/// `classes` defaults to every label present; a requested label with no rows
/// is an error. The model for class c uses master seed derive_seed(seed, c).
OvrModel train_ovr(const Dataset& data, const BprParams& params, const TrainOptions& options = {},
                   std::optional<std::vector<int>> classes = std::nullopt);

struct OvrPrediction {
    std::vector<int> labels;
    Matrix scores;  // n x classes, median probability per class
    std::size_t ties = 0;
};

/// Argmax of the class scores; exact ties go to the first label in class order.
OvrPrediction predict_ovr(const OvrModel& model, const Matrix& features, std::size_t workers = 1);
OvrPrediction argmax_scores(const Matrix& scores, std::span<const int> labels);

}  // namespace bpr
