#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bpr/bagging.hpp"
#include "bpr/data.hpp"

namespace bpr {

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Seeded shuffle cut into `folds` near-equal validation blocks (larger blocks
/// first). Index lists inside each fold are sorted.
std::vector<Fold> kfold(std::size_t n, std::size_t folds, std::uint64_t seed);

enum class Metric { Accuracy, MSE };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);

/// Candidate lists for J, F, M, S and lambda. An unset S means every
/// training row of the fold.
struct GridSpec {
    std::vector<int> degrees{2};
    std::vector<std::size_t> features{1};
    std::vector<std::size_t> models{1};
    std::vector<std::optional<std::size_t>> samples{std::nullopt};
    std::vector<double> lambdas{0.0};
    std::size_t folds = 5;
    Metric metric = Metric::MSE;
    std::uint64_t seed = 0;

    std::size_t cell_count() const;
    void validate(std::size_t n, std::size_t d) const;
};

struct CellResult {
    BprParams params;
    std::vector<double> fold_metrics;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation across folds
    std::size_t parameter_count = 0;  // M * (embed_dim + 1)
    bool failed = false;
    std::string error;
    std::size_t rank = 0;  // 1 = best; 0 for failed cells
};

struct GridResult {
    std::vector<CellResult> cells;  // grid order: J, F, M, S, lambda (last varies fastest)
    std::vector<std::size_t> ranking;
    std::optional<BprParams> best;
};

/// Score of one trained configuration on held-out rows. Accuracy uses
/// one-vs-rest when the labels have more than two classes.
double evaluate_params(const Dataset& train, const Dataset& validation, const BprParams& params, Metric metric,
                       std::size_t workers = 1);

/// Every cell is evaluated on the same folds. Cells that throw are recorded as
/// failed and excluded from the ranking. Ranking: best mean metric, then fewer
/// parameters, then smaller M, then grid order.
GridResult grid_search(const Dataset& data, const GridSpec& grid, const BprParams& base, std::size_t workers = 1);

void write_grid_raw_csv(std::ostream& out, const GridResult& result);
void write_grid_summary_csv(std::ostream& out, const GridResult& result);

}  // namespace bpr
