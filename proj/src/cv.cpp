#include "bpr/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bpr/error.hpp"
#include "bpr/parallel.hpp"
#include "bpr/rng.hpp"
#include "bpr/text.hpp"

namespace bpr {

namespace {

std::string sample_text(const std::optional<std::size_t>& s) { return s ? std::to_string(*s) : "all"; }

bool better(const CellResult& a, const CellResult& b, Metric metric) {
    if (a.mean != b.mean) return metric == Metric::Accuracy ? a.mean > b.mean : a.mean < b.mean;
    if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
    return a.params.num_models < b.params.num_models;
}

}  // namespace

std::vector<Fold> kfold(std::size_t n, std::size_t folds, std::uint64_t seed) {
    require(folds >= 2, "k-fold needs at least two folds");
    require(folds <= n, "cannot make " + std::to_string(folds) + " folds from " + std::to_string(n) + " rows");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<std::size_t> owner(n);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) owner[order[pos++]] = f;
    }
    std::vector<Fold> out(folds);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < folds; ++f) (owner[i] == f ? out[f].validation : out[f].train).push_back(i);
    return out;
}

std::string to_string(Metric metric) { return metric == Metric::Accuracy ? "accuracy" : "mse"; }

Metric parse_metric(const std::string& text) {
    if (text == "accuracy") return Metric::Accuracy;
    if (text == "mse") return Metric::MSE;
    throw ValidationError("unknown metric '" + text + "'");
}

std::size_t GridSpec::cell_count() const {
    return degrees.size() * features.size() * models.size() * samples.size() * lambdas.size();
}

void GridSpec::validate(std::size_t n, std::size_t d) const {
    require(!degrees.empty() && !features.empty() && !models.empty() && !samples.empty() && !lambdas.empty(),
            "every grid candidate list must be non-empty");
    require(folds >= 2 && folds <= n, "fold count must lie in 2..n");
    const std::size_t min_train = n - (n + folds - 1) / folds;
    for (int J : degrees) require(J >= 1, "grid degree must be at least 1");
    for (auto F : features) require(F >= 1 && F <= d, "grid F=" + std::to_string(F) + " must lie in 1..d");
    for (auto M : models) require(M >= 1, "grid M must be at least 1");
    for (const auto& S : samples)
        if (S) require(*S >= 1 && *S <= min_train, "grid S=" + std::to_string(*S) +
                                                       " exceeds the smallest training fold (" +
                                                       std::to_string(min_train) + " rows)");
    for (double l : lambdas) require(l >= 0.0 && std::isfinite(l), "grid lambda must be non-negative");
}

double evaluate_params(const Dataset& train, const Dataset& validation, const BprParams& params, Metric metric,
                       std::size_t workers) {
    TrainOptions options{workers};
    if (metric == Metric::MSE) {
        BprParams p = params;
        p.task = Task::Regression;
        const auto model = train_bpr(train, p, options);
        const auto pred = predict_bpr(model, validation.features, workers);
        const auto y = validation.target_values();
        double sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) sum += (pred[i] - y[i]) * (pred[i] - y[i]);
        return sum / static_cast<double>(y.size());
    }
    const auto& truth = validation.labels();
    std::vector<int> predicted;
    const auto classes = train.label_set();
    const bool binary = classes.size() <= 2 && std::all_of(classes.begin(), classes.end(), [](int c) { return c == 0 || c == 1; });
    if (binary) {
        BprParams p = params;
        p.task = Task::BinaryClassification;
        const auto model = train_bpr(train, p, options);
        for (double score : predict_bpr(model, validation.features, workers)) predicted.push_back(score > 0.5 ? 1 : 0);
    } else {
        predicted = predict_ovr(train_ovr(train, params, options), validation.features, workers).labels;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

GridResult grid_search(const Dataset& data, const GridSpec& grid, const BprParams& base, std::size_t workers) {
    grid.validate(data.rows(), data.cols());
    require(grid.metric == Metric::MSE || data.has_labels(), "accuracy needs labelled data");
    const auto folds = kfold(data.rows(), grid.folds, grid.seed);

    GridResult result;
    for (int J : grid.degrees)
        for (auto F : grid.features)
            for (auto M : grid.models)
                for (const auto& S : grid.samples)
                    for (double lambda : grid.lambdas) {
                        CellResult cell;
                        cell.params = base;
                        cell.params.degree = J;
                        cell.params.features_per_model = F;
                        cell.params.num_models = M;
                        cell.params.sample_size = S;
                        cell.params.ridge_lambda = lambda;
                        cell.fold_metrics.assign(grid.folds, 0.0);
                        result.cells.push_back(std::move(cell));
                    }

    std::vector<Dataset> trains;
    std::vector<Dataset> validations;
    for (const auto& f : folds) {
        trains.push_back(data.subset(f.train));
        validations.push_back(data.subset(f.validation));
    }

    const std::size_t tasks = result.cells.size() * grid.folds;
    std::vector<std::string> errors(tasks);
    parallel_for(tasks, workers, [&](std::size_t task) {
        const std::size_t c = task / grid.folds;
        const std::size_t f = task % grid.folds;
        try {
            result.cells[c].fold_metrics[f] =
                evaluate_params(trains[f], validations[f], result.cells[c].params, grid.metric);
        } catch (const Error& e) {
            errors[task] = e.what();
        }
    });

    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        auto& cell = result.cells[c];
        for (std::size_t f = 0; f < grid.folds; ++f)
            if (!errors[c * grid.folds + f].empty() && !cell.failed) {
                cell.failed = true;
                cell.error = "fold " + std::to_string(f) + ": " + errors[c * grid.folds + f];
            }
        cell.parameter_count = cell.params.num_models * cell.params.parameters_per_model();
        if (cell.failed) continue;
        double sum = 0.0;
        for (double m : cell.fold_metrics) sum += m;
        cell.mean = sum / static_cast<double>(grid.folds);
        double sq = 0.0;
        for (double m : cell.fold_metrics) sq += (m - cell.mean) * (m - cell.mean);
        cell.stddev = std::sqrt(sq / static_cast<double>(grid.folds - 1));
        result.ranking.push_back(c);
    }
    std::stable_sort(result.ranking.begin(), result.ranking.end(), [&](std::size_t a, std::size_t b) {
        return better(result.cells[a], result.cells[b], grid.metric);
    });
    for (std::size_t r = 0; r < result.ranking.size(); ++r) result.cells[result.ranking[r]].rank = r + 1;
    if (!result.ranking.empty()) result.best = result.cells[result.ranking.front()].params;
    return result;
}

void write_grid_raw_csv(std::ostream& out, const GridResult& result) {
    out << "J,F,M,S,lambda,fold,metric\n";
    for (const auto& cell : result.cells) {
        if (cell.failed) continue;
        const auto& p = cell.params;
        for (std::size_t f = 0; f < cell.fold_metrics.size(); ++f)
            out << p.degree << ',' << p.features_per_model << ',' << p.num_models << ',' << sample_text(p.sample_size)
                << ',' << format_double(p.ridge_lambda) << ',' << f << ',' << format_double(cell.fold_metrics[f])
                << '\n';
    }
}

void write_grid_summary_csv(std::ostream& out, const GridResult& result) {
    out << "J,F,M,S,lambda,mean,std,parameters,status,rank\n";
    for (const auto& cell : result.cells) {
        const auto& p = cell.params;
        out << p.degree << ',' << p.features_per_model << ',' << p.num_models << ',' << sample_text(p.sample_size)
            << ',' << format_double(p.ridge_lambda) << ',';
        if (cell.failed) out << ",," << cell.parameter_count << ",failed,\n";
        else
            out << format_double(cell.mean) << ',' << format_double(cell.stddev) << ',' << cell.parameter_count
                << ",ok," << cell.rank << '\n';
    }
}

}  // namespace bpr
