// Cross-validated choice of F on an additive target, d = 8.
#include <gtest/gtest.h>

#include "bpr/cv.hpp"

using namespace bpr;

TEST(FeatureSelection, AdditiveSineGridPrefersFewerThanAllFeatures) {
    const auto data = synth({2000, 8, TargetFamily::AdditiveSine, 1.0, 0.1, 1}).data;
    GridSpec grid;
    grid.degrees = {2};
    grid.features = {2, 4, 8};
    grid.models = {20};
    grid.lambdas = {1e-4};
    grid.folds = 5;
    grid.seed = 3;
    BprParams base;
    base.sgd.epochs = 30;
    base.master_seed = 9;
    const auto result = grid_search(data, grid, base);
    for (const auto& cell : result.cells)
        std::printf("F=%zu mean_mse=%.6f std=%.6f%s\n", cell.params.features_per_model, cell.mean, cell.stddev,
                    cell.failed ? " failed" : "");
    ASSERT_TRUE(result.best.has_value());
    EXPECT_LT(result.best->features_per_model, 8u);
}
