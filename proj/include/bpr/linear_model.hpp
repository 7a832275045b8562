#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpr/embedding.hpp"
#include "bpr/matrix.hpp"

namespace bpr {

enum class Task { Regression, BinaryClassification };
enum class LearningRateSchedule { Constant, InverseDecay };

std::string to_string(Task task);
Task parse_task(const std::string& text);
std::string to_string(LearningRateSchedule schedule);
LearningRateSchedule parse_schedule(const std::string& text);

/// Mini-batch SGD settings. With InverseDecay the step size at update t is
/// learning_rate / (1 + t / T), T being the total number of updates.
struct SgdConfig {
    double learning_rate = 0.01;
    LearningRateSchedule schedule = LearningRateSchedule::InverseDecay;
    int epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double ridge_lambda = 0.0;
    bool standardize = true;
    bool fit_intercept = true;
    double positive_weight = 1.0;  // logistic loss weight on label-1 rows

    void validate() const;
    friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

/// Per-column affine map z -> (z - mean) / scale. Constant columns get scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    void apply(std::span<double> row) const {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
    }
    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct TrainingTrace {
    std::vector<double> epoch_loss;  // mean mini-batch objective per epoch
    bool single_class = false;       // logistic fit saw only one label value
    friend bool operator==(const TrainingTrace&, const TrainingTrace&) = default;
};

struct LinearSubModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::optional<Standardizer> scaler;
    std::optional<EmbeddingSpec> embedding;  // set when the model owns its feature map
    std::vector<std::size_t> feature_subset;  // raw input columns feeding the embedding
    Task task = Task::Regression;
    TrainingTrace trace;

    std::size_t width() const noexcept { return weights.size(); }
    /// <w, standardized z> + intercept for one already-embedded row.
    double linear(std::span<const double> features) const;
    /// Standardization folded into the weights, for sparse rows.
    struct Folded {
        std::vector<double> weights;  // w_j / scale_j
        double offset = 0.0;          // intercept - sum_j w_j mean_j / scale_j

        double linear(const SparseRow& row) const {
            double s = offset;
            for (std::size_t t = 0; t < row.size(); ++t) s += weights[row.index[t]] * row.value[t];
            return s;
        }
    };
    Folded fold() const;
    void validate() const;

    friend bool operator==(const LinearSubModel&, const LinearSubModel&) = default;
};

/// Supplies training rows one at a time, so wide embeddings never need to be
/// materialized for the whole sample.
class RowSource {
public:
    virtual ~RowSource() = default;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
    virtual void fill_row(std::size_t i, std::span<double> out) const = 0;
    /// Nonzero entries of row i. The default goes through fill_row.
    virtual void fill_sparse(std::size_t i, SparseRow& out) const;
};

class MatrixRows final : public RowSource {
public:
    explicit MatrixRows(const Matrix& m) : m_(m) {}
    std::size_t rows() const override { return m_.rows(); }
    std::size_t cols() const override { return m_.cols(); }
    void fill_row(std::size_t i, std::span<double> out) const override;
    void fill_sparse(std::size_t i, SparseRow& out) const override;

private:
    const Matrix& m_;
};

LinearSubModel fit_ridge_sgd(const RowSource& features, std::span<const double> targets, const SgdConfig& config);
LinearSubModel fit_ridge_sgd(const Matrix& features, std::span<const double> targets, const SgdConfig& config);

/// Labels must be 0 or 1.
LinearSubModel fit_logistic_sgd(const RowSource& features, std::span<const double> labels, const SgdConfig& config);
LinearSubModel fit_logistic_sgd(const Matrix& features, std::span<const double> labels, const SgdConfig& config);

struct ClosedFormOptions {
    bool fit_intercept = false;
    bool standardize = false;
    std::size_t max_features = 5000;
};

/// Exact minimizer of mean squared error + lambda * ||w||^2 (intercept
/// unpenalized), i.e. w = (Z'Z + n*lambda*I)^{-1} Z'y on the (optionally
/// standardized and centered) design Z.
LinearSubModel fit_ridge_closed_form(const Matrix& features, std::span<const double> targets, double lambda,
                                     const ClosedFormOptions& options = {});

std::vector<double> predict_linear(const LinearSubModel& model, const Matrix& features);
std::vector<double> predict_proba(const LinearSubModel& model, const Matrix& features);

/// Numerically stable logistic function, clamped into the open interval (0, 1).
double sigmoid(double margin);

/// Full-sample objective and its gradient with respect to the standardized
/// weights, computed with the same per-row code SGD uses.
struct ObjectiveValue {
    double loss = 0.0;
    std::vector<double> grad_weights;
    double grad_intercept = 0.0;
};

ObjectiveValue squared_objective(const Matrix& features, std::span<const double> targets,
                                 std::span<const double> weights, double intercept, double lambda);
ObjectiveValue logistic_objective(const Matrix& features, std::span<const double> labels,
                                  std::span<const double> weights, double intercept, double lambda,
                                  double positive_weight = 1.0);

}  // namespace bpr
