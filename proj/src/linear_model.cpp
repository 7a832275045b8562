#include "bpr/linear_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bpr/error.hpp"
#include "bpr/rng.hpp"

namespace bpr {

namespace {

enum class Loss { Squared, Logistic };

double softplus(double m) {
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

template <Loss L>
double row_loss(double margin, double target, double positive_weight, double& slope) {
    if constexpr (L == Loss::Squared) {
        const double residual = target - margin;
        slope = -2.0 * residual;
        return residual * residual;
    } else {
        const double weight = target > 0.5 ? positive_weight : 1.0;
        slope = weight * (sigmoid(margin) - target);
        return weight * (softplus(margin) - target * margin);
    }
}

/// Adds one row's loss and gradient contribution; returns the row loss.
template <Loss L>
double accumulate_row(std::span<const double> z, double target, std::span<const double> w, double b,
                      double positive_weight, std::span<double> grad_w, double& grad_b) {
    double slope;
    const double loss = row_loss<L>(dot(w, z) + b, target, positive_weight, slope);
    for (std::size_t j = 0; j < z.size(); ++j) grad_w[j] += slope * z[j];
    grad_b += slope;
    return loss;
}

void check_targets(std::span<const double> targets, std::size_t n, bool binary) {
    if (targets.size() != n)
        throw ShapeError("target length " + std::to_string(targets.size()) + " does not match " + std::to_string(n) +
                         " rows");
    for (double y : targets) {
        if (!std::isfinite(y)) throw ValidationError("non-finite target value");
        if (binary && y != 0.0 && y != 1.0) throw ValidationError("logistic labels must be 0 or 1");
    }
}

/// Two passes over the nonzero entries (mean, then centred second moment);
/// also rejects non-finite features.
Standardizer fit_standardizer(const RowSource& source, bool standardize) {
    const std::size_t n = source.rows();
    const std::size_t k = source.cols();
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> nonzero(k, 0);
    SparseRow row;
    for (std::size_t i = 0; i < n; ++i) {
        source.fill_sparse(i, row);
        for (std::size_t t = 0; t < row.size(); ++t) {
            const double v = row.value[t];
            if (!std::isfinite(v)) throw ValidationError("non-finite feature value at row " + std::to_string(i));
            sum[row.index[t]] += v;
            ++nonzero[row.index[t]];
        }
    }
    Standardizer s;
    if (!standardize) return s;
    const double inv_n = 1.0 / static_cast<double>(n);
    s.mean.resize(k);
    for (std::size_t j = 0; j < k; ++j) s.mean[j] = sum[j] * inv_n;
    std::vector<double> m2(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        source.fill_sparse(i, row);
        for (std::size_t t = 0; t < row.size(); ++t) {
            const double delta = row.value[t] - s.mean[row.index[t]];
            m2[row.index[t]] += delta * delta;
        }
    }
    s.scale.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double zeros = static_cast<double>(n - nonzero[j]);
        const double sd = std::sqrt((m2[j] + zeros * s.mean[j] * s.mean[j]) * inv_n);
        s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
    }
    return s;
}

// Rows arrive sparse and unstandardized. With v_j = w_j / scale_j the margin
// is sum_nz v_j z_j + (b - sum_j v_j mean_j), and the batch gradient for w_j is
// (sum_i slope_i z_ij - mean_j sum_i slope_i) / scale_j, so per-row work is
// proportional to the row's nonzeros and dense work happens once per batch.
template <Loss L>
LinearSubModel fit_sgd(const RowSource& source, std::span<const double> targets, const SgdConfig& config) {
    config.validate();
    const std::size_t n = source.rows();
    const std::size_t k = source.cols();
    if (n == 0) throw ValidationError("cannot fit a model on an empty sample");
    check_targets(targets, n, L == Loss::Logistic);

    LinearSubModel model;
    model.task = L == Loss::Squared ? Task::Regression : Task::BinaryClassification;
    Standardizer scaler = fit_standardizer(source, config.standardize);
    if (config.standardize) model.scaler = scaler;
    if constexpr (L == Loss::Logistic) {
        const bool all_same = std::all_of(targets.begin(), targets.end(), [&](double y) { return y == targets[0]; });
        model.trace.single_class = all_same;
    }
    const bool scaled = config.standardize;

    std::vector<double> w(k, 0.0);
    double b = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed);

    const std::size_t batch = std::min(config.batch_size, n);
    const std::size_t steps_per_epoch = (n + batch - 1) / batch;
    const double total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
    std::vector<double> v(k, 0.0);
    std::vector<double> grad(k);
    SparseRow z;
    std::size_t step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_objective = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            const double count = static_cast<double>(stop - start);
            double offset = b;
            if (scaled) {
                for (std::size_t j = 0; j < k; ++j) {
                    v[j] = w[j] / scaler.scale[j];
                    offset -= v[j] * scaler.mean[j];
                }
            }
            const std::vector<double>& coef = scaled ? v : w;
            std::fill(grad.begin(), grad.end(), 0.0);
            double slope_sum = 0.0;
            double loss = 0.0;
            for (std::size_t p = start; p < stop; ++p) {
                const std::size_t i = order[p];
                source.fill_sparse(i, z);
                double margin = offset;
                for (std::size_t t = 0; t < z.size(); ++t) margin += coef[z.index[t]] * z.value[t];
                double slope;
                loss += row_loss<L>(margin, targets[i], config.positive_weight, slope);
                for (std::size_t t = 0; t < z.size(); ++t) grad[z.index[t]] += slope * z.value[t];
                slope_sum += slope;
            }
            const double penalty = config.ridge_lambda * squared_norm(w);
            epoch_objective += loss + count * penalty;

            double eta = config.learning_rate;
            if (config.schedule == LearningRateSchedule::InverseDecay)
                eta = config.learning_rate / (1.0 + static_cast<double>(step) / total_steps);
            const double inv = 1.0 / count;
            const double decay = 2.0 * config.ridge_lambda;
            if (scaled) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double g = (grad[j] - scaler.mean[j] * slope_sum) / scaler.scale[j];
                    w[j] -= eta * (g * inv + decay * w[j]);
                }
            } else {
                for (std::size_t j = 0; j < k; ++j) w[j] -= eta * (grad[j] * inv + decay * w[j]);
            }
            if (config.fit_intercept) b -= eta * slope_sum * inv;
            ++step;
        }
        const double mean_objective = epoch_objective / static_cast<double>(n);
        model.trace.epoch_loss.push_back(mean_objective);
        if (!std::isfinite(mean_objective) || !std::isfinite(b))
            throw DivergenceError("SGD diverged at epoch " + std::to_string(epoch + 1) + " (non-finite loss)",
                                  epoch + 1);
    }
    for (double x : w)
        if (!std::isfinite(x)) throw DivergenceError("SGD produced non-finite weights", config.epochs);

    model.weights = std::move(w);
    model.intercept = b;
    return model;
}

template <Loss L>
ObjectiveValue full_objective(const Matrix& features, std::span<const double> targets,
                              std::span<const double> weights, double intercept, double lambda,
                              double positive_weight) {
    const std::size_t n = features.rows();
    if (n == 0) throw ValidationError("objective needs at least one row");
    if (weights.size() != features.cols()) throw ShapeError("weight length does not match feature width");
    check_targets(targets, n, L == Loss::Logistic);
    ObjectiveValue out;
    out.grad_weights.assign(weights.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss += accumulate_row<L>(features.row(i), targets[i], weights, intercept, positive_weight, out.grad_weights,
                                  out.grad_intercept);
    const double inv = 1.0 / static_cast<double>(n);
    out.loss = loss * inv + lambda * squared_norm(weights);
    for (std::size_t j = 0; j < weights.size(); ++j) out.grad_weights[j] = out.grad_weights[j] * inv + 2.0 * lambda * weights[j];
    out.grad_intercept *= inv;
    return out;
}

void check_width(const LinearSubModel& model, const Matrix& features) {
    if (features.cols() != model.width())
        throw ShapeError("feature width " + std::to_string(features.cols()) + " does not match model width " +
                         std::to_string(model.width()));
}

}  // namespace

std::string to_string(Task task) {
    return task == Task::Regression ? "regression" : "binary_classification";
}

Task parse_task(const std::string& text) {
    if (text == "regression") return Task::Regression;
    if (text == "binary_classification" || text == "classification") return Task::BinaryClassification;
    throw ValidationError("unknown task '" + text + "'");
}

std::string to_string(LearningRateSchedule schedule) {
    return schedule == LearningRateSchedule::Constant ? "constant" : "inverse_decay";
}

LearningRateSchedule parse_schedule(const std::string& text) {
    if (text == "constant") return LearningRateSchedule::Constant;
    if (text == "inverse_decay") return LearningRateSchedule::InverseDecay;
    throw ValidationError("unknown learning-rate schedule '" + text + "'");
}

void SgdConfig::validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(epochs >= 1, "epochs must be at least 1");
    require(batch_size >= 1, "batch_size must be at least 1");
    require(ridge_lambda >= 0.0 && std::isfinite(ridge_lambda), "ridge lambda must be non-negative");
    require(positive_weight > 0.0 && std::isfinite(positive_weight), "positive_weight must be positive");
}

double LinearSubModel::linear(std::span<const double> features) const {
    double s = 0.0;
    if (scaler) {
        for (std::size_t j = 0; j < weights.size(); ++j)
            s += weights[j] * ((features[j] - scaler->mean[j]) / scaler->scale[j]);
    } else {
        for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * features[j];
    }
    return s + intercept;
}

LinearSubModel::Folded LinearSubModel::fold() const {
    Folded f;
    f.weights = weights;
    f.offset = intercept;
    if (scaler) {
        for (std::size_t j = 0; j < weights.size(); ++j) {
            f.weights[j] = weights[j] / scaler->scale[j];
            f.offset -= f.weights[j] * scaler->mean[j];
        }
    }
    return f;
}

void LinearSubModel::validate() const {
    for (double v : weights)
        if (!std::isfinite(v)) throw ValidationError("model weights must be finite");
    require(std::isfinite(intercept), "model intercept must be finite");
    if (scaler) {
        require(scaler->mean.size() == weights.size() && scaler->scale.size() == weights.size(),
                "standardizer width does not match weights");
        for (double s : scaler->scale) require(s > 0.0 && std::isfinite(s), "standardizer scales must be positive");
    }
    if (embedding) {
        const auto dim = embed_dim(*embedding, feature_subset.size());
        require(static_cast<std::int64_t>(weights.size()) == dim + (embedding->include_intercept ? 1 : 0),
                "weight count does not match the embedding dimension");
    }
}

void RowSource::fill_sparse(std::size_t i, SparseRow& out) const {
    std::vector<double> dense(cols());
    fill_row(i, dense);
    out.clear();
    for (std::size_t j = 0; j < dense.size(); ++j)
        if (dense[j] != 0.0) out.push(j, dense[j]);
}

void MatrixRows::fill_row(std::size_t i, std::span<double> out) const {
    auto r = m_.row(i);
    std::copy(r.begin(), r.end(), out.begin());
}

void MatrixRows::fill_sparse(std::size_t i, SparseRow& out) const {
    auto r = m_.row(i);
    out.clear();
    for (std::size_t j = 0; j < r.size(); ++j)
        if (r[j] != 0.0) out.push(j, r[j]);
}

LinearSubModel fit_ridge_sgd(const RowSource& features, std::span<const double> targets, const SgdConfig& config) {
    return fit_sgd<Loss::Squared>(features, targets, config);
}

LinearSubModel fit_ridge_sgd(const Matrix& features, std::span<const double> targets, const SgdConfig& config) {
    return fit_sgd<Loss::Squared>(MatrixRows(features), targets, config);
}

LinearSubModel fit_logistic_sgd(const RowSource& features, std::span<const double> labels, const SgdConfig& config) {
    return fit_sgd<Loss::Logistic>(features, labels, config);
}

LinearSubModel fit_logistic_sgd(const Matrix& features, std::span<const double> labels, const SgdConfig& config) {
    return fit_sgd<Loss::Logistic>(MatrixRows(features), labels, config);
}

LinearSubModel fit_ridge_closed_form(const Matrix& features, std::span<const double> targets, double lambda,
                                     const ClosedFormOptions& options) {
    const std::size_t n = features.rows();
    const std::size_t k = features.cols();
    if (n == 0) throw ValidationError("cannot fit a model on an empty sample");
    require(lambda >= 0.0 && std::isfinite(lambda), "ridge lambda must be non-negative");
    if (k > options.max_features)
        throw ValidationError("closed-form ridge is capped at " + std::to_string(options.max_features) + " features");
    check_targets(targets, n, false);

    MatrixRows rows(features);
    Standardizer scaler = fit_standardizer(rows, options.standardize);

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor z = Eigen::Map<const RowMajor>(features.data().data(), static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(k));
    if (options.standardize)
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            z.col(j) = (z.col(j).array() - scaler.mean[static_cast<std::size_t>(j)]) /
                       scaler.scale[static_cast<std::size_t>(j)];
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(n));

    Eigen::RowVectorXd z_mean = Eigen::RowVectorXd::Zero(z.cols());
    double y_mean = 0.0;
    if (options.fit_intercept) {
        z_mean = z.colwise().mean();
        y_mean = y.mean();
        z.rowwise() -= z_mean;
        y.array() -= y_mean;
    }

    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += static_cast<double>(n) * lambda;
    const Eigen::VectorXd rhs = z.transpose() * y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < static_cast<Eigen::Index>(k))
        throw NumericalError("rank-deficient normal equations (rank " + std::to_string(qr.rank()) + " < " +
                             std::to_string(k) + "); use lambda > 0");
    const Eigen::VectorXd w = qr.solve(rhs);

    LinearSubModel model;
    model.weights.assign(w.data(), w.data() + w.size());
    model.intercept = options.fit_intercept ? y_mean - z_mean.dot(w) : 0.0;
    if (options.standardize) model.scaler = std::move(scaler);
    return model;
}

std::vector<double> predict_linear(const LinearSubModel& model, const Matrix& features) {
    check_width(model, features);
    std::vector<double> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out[i] = model.linear(features.row(i));
    return out;
}

std::vector<double> predict_proba(const LinearSubModel& model, const Matrix& features) {
    auto out = predict_linear(model, features);
    for (double& v : out) v = sigmoid(v);
    return out;
}

double sigmoid(double margin) {
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    double p;
    if (margin >= 0) {
        p = 1.0 / (1.0 + std::exp(-margin));
    } else {
        const double e = std::exp(margin);
        p = e / (1.0 + e);
    }
    return std::clamp(p, lo, hi);
}

ObjectiveValue squared_objective(const Matrix& features, std::span<const double> targets,
                                 std::span<const double> weights, double intercept, double lambda) {
    return full_objective<Loss::Squared>(features, targets, weights, intercept, lambda, 1.0);
}

ObjectiveValue logistic_objective(const Matrix& features, std::span<const double> labels,
                                  std::span<const double> weights, double intercept, double lambda,
                                  double positive_weight) {
    return full_objective<Loss::Logistic>(features, labels, weights, intercept, lambda, positive_weight);
}

}  // namespace bpr
