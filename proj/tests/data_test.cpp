#include "bpr/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "bpr/embedding.hpp"
#include "bpr/linear_model.hpp"
#include "test_support.hpp"

using namespace bpr;
using bpr::testing::TempDir;

namespace {

IdxImages tiny_images() {
    IdxImages img;
    img.count = 3;
    img.rows = 2;
    img.cols = 2;
    img.pixels = {0, 255, 128, 1, 2, 3, 4, 5, 250, 251, 252, 253};
    return img;
}

std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class F>
IdxErrorKind idx_error_kind(F&& f) {
    try {
        f();
    } catch (const IdxFormatError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no IdxFormatError thrown";
    return IdxErrorKind::BadMagic;
}

Matrix embed_rows(const PolynomialEmbedder& e, const Matrix& x) {
    Matrix out(x.rows(), e.output_dim());
    for (std::size_t i = 0; i < x.rows(); ++i) e.embed(x.row(i), out.row(i));
    return out;
}

}  // namespace

TEST(Idx, RoundTripReproducesBytesAndValues) {
    TempDir dir;
    const auto img = tiny_images();
    const std::vector<std::uint8_t> labels{7, 0, 9};
    write_idx_images(dir / "img", img);
    write_idx_labels(dir / "lab", labels);

    // Header: magic, count, rows, cols big-endian, then raw bytes.
    std::vector<std::uint8_t> expected{0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2};
    expected.insert(expected.end(), img.pixels.begin(), img.pixels.end());
    EXPECT_EQ(bytes_of(dir / "img"), expected);

    const auto back = read_idx_images(dir / "img");
    EXPECT_EQ(back.count, 3u);
    EXPECT_EQ(back.rows, 2u);
    EXPECT_EQ(back.cols, 2u);
    EXPECT_EQ(back.pixels, img.pixels);
    EXPECT_EQ(read_idx_labels(dir / "lab"), labels);

    write_idx_images(dir / "img2", back);
    EXPECT_EQ(bytes_of(dir / "img2"), bytes_of(dir / "img"));

    const auto data = load_idx(dir / "img", dir / "lab");
    ASSERT_EQ(data.rows(), 3u);
    ASSERT_EQ(data.cols(), 4u);
    EXPECT_EQ(data.features(0, 0), 0.0);
    EXPECT_EQ(data.features(0, 1), 1.0);
    EXPECT_EQ(data.features(0, 2), 128.0 / 255.0);
    EXPECT_EQ(data.labels(), (LabelTargets{7, 0, 9}));
    EXPECT_EQ(data.meta.normalization, "pixel/255");
}

TEST(Idx, SwappedFilesGiveBadMagic) {
    TempDir dir;
    write_idx_images(dir / "img", tiny_images());
    write_idx_labels(dir / "lab", std::vector<std::uint8_t>{1, 2, 3});
    EXPECT_EQ(idx_error_kind([&] { load_idx(dir / "lab", dir / "img"); }), IdxErrorKind::BadMagic);
    EXPECT_EQ(idx_error_kind([&] { read_idx_labels(dir / "img"); }), IdxErrorKind::BadMagic);
}

TEST(Idx, TruncatedPayloadAndHeader) {
    TempDir dir;
    write_idx_images(dir / "img", tiny_images());
    auto bytes = bytes_of(dir / "img");
    bytes.pop_back();
    write_bytes(dir / "short", bytes);
    EXPECT_EQ(idx_error_kind([&] { read_idx_images(dir / "short"); }), IdxErrorKind::Truncated);
    write_bytes(dir / "header", {0, 0, 8, 3, 0, 0});
    EXPECT_EQ(idx_error_kind([&] { read_idx_images(dir / "header"); }), IdxErrorKind::Truncated);
}

TEST(Idx, CountMismatch) {
    TempDir dir;
    write_idx_images(dir / "img", tiny_images());
    write_idx_labels(dir / "lab", std::vector<std::uint8_t>{1, 2});
    EXPECT_EQ(idx_error_kind([&] { load_idx(dir / "img", dir / "lab"); }), IdxErrorKind::CountMismatch);
}

TEST(Idx, MissingFileIsIoError) {
    EXPECT_THROW(read_idx_images("/nonexistent/bpr/images"), IoError);
}

TEST(Mnist, OfficialFiles) {
    const auto dir = bpr::testing::mnist_dir();
    if (!dir) GTEST_SKIP() << "MNIST files not found";
    const auto train = load_idx(*dir / "train-images-idx3-ubyte", *dir / "train-labels-idx1-ubyte");
    const auto test = load_idx(*dir / "t10k-images-idx3-ubyte", *dir / "t10k-labels-idx1-ubyte");
    EXPECT_EQ(train.rows(), 60000u);
    EXPECT_EQ(train.cols(), 784u);
    EXPECT_EQ(test.rows(), 10000u);
    EXPECT_EQ(test.cols(), 784u);

    const auto px = train.features.data();
    EXPECT_TRUE(std::all_of(px.begin(), px.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
    EXPECT_NE(std::find(px.begin(), px.end(), 0.0), px.end());
    EXPECT_NE(std::find(px.begin(), px.end(), 1.0), px.end());
    EXPECT_EQ(train.label_set(), (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));

    const auto ones = binarize(train, 1);
    const auto& y = ones.labels();
    const auto positives = std::count(y.begin(), y.end(), 1);
    EXPECT_EQ(positives, std::count(train.labels().begin(), train.labels().end(), 1));
    EXPECT_NEAR(static_cast<double>(positives) / 60000.0, 0.112, 0.001);
}

TEST(Synth, TruthFamilies) {
    const double x[] = {0.25, 0.5};
    EXPECT_NEAR(target_function(TargetFamily::AdditiveSine, 2)(x), (1.0 + 0.0) / 2.0, 1e-15);
    EXPECT_NEAR(target_function(TargetFamily::ProductCosine, 2)(x), std::cos(M_PI / 4) * std::cos(M_PI / 2), 1e-15);
    EXPECT_EQ(target_function(TargetFamily::PolynomialTruth, 2)(x), 0.0625);
}

TEST(Synth, PolynomialTruthRecoveredExactly) {
    SynthSpec spec{400, 2, TargetFamily::PolynomialTruth, 1.0, 0.0, 11};
    auto train = synth(spec);
    spec.seed = 12;
    auto test = synth(spec);
    PolynomialEmbedder e({EmbeddingMode::TensorProduct, 2, {}, false}, 2);
    const auto model = fit_ridge_closed_form(embed_rows(e, train.data.features), train.data.responses(), 0.0,
                                             {.fit_intercept = true});
    const auto pred = predict_linear(model, embed_rows(e, test.data.features));
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred[i] - test.data.responses()[i];
        mse += diff * diff;
    }
    EXPECT_LE(mse / static_cast<double>(pred.size()), 1e-8);
}

TEST(Synth, ResidualsCentred) {
    const double sigma = 0.3;
    const auto s = synth({5000, 3, TargetFamily::AdditiveSine, 1.0, sigma, 5});
    double sum = 0.0;
    for (std::size_t i = 0; i < s.data.rows(); ++i) sum += s.data.responses()[i] - s.truth(s.data.features.row(i));
    EXPECT_LE(std::abs(sum / 5000.0), 3.0 * sigma / std::sqrt(5000.0));
}

TEST(Synth, NoiseVarianceWithinFivePercent) {
    for (double sigma : {0.1, 1.0, 2.5}) {
        const auto s = synth({100000, 2, TargetFamily::ProductCosine, 1.0, sigma, 99});
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < s.data.rows(); ++i) {
            const double e = s.data.responses()[i] - s.truth(s.data.features.row(i));
            sum += e;
            sq += e * e;
        }
        const double mean = sum / 1e5;
        const double var = sq / 1e5 - mean * mean;
        EXPECT_NEAR(var / (sigma * sigma), 1.0, 0.05) << sigma;
    }
}

TEST(Synth, FeaturesInUnitCubeAndDeterministic) {
    const SynthSpec spec{300, 4, TargetFamily::AdditiveSine, 2.0, 0.5, 42};
    const auto a = synth(spec);
    const auto b = synth(spec);
    EXPECT_EQ(a.data.features, b.data.features);
    EXPECT_EQ(a.data.responses(), b.data.responses());
    const auto px = a.data.features.data();
    EXPECT_TRUE(std::all_of(px.begin(), px.end(), [](double v) { return v >= 0.0 && v < 1.0; }));
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(synth(other).data.features, a.data.features);
    EXPECT_EQ(a.data.meta.seed, std::optional<std::uint64_t>(42));
}

TEST(Synth, InvalidSpec) {
    EXPECT_THROW(synth({0, 2, TargetFamily::AdditiveSine, 1.0, 0.0, 0}), ValidationError);
    EXPECT_THROW(synth({10, 0, TargetFamily::AdditiveSine, 1.0, 0.0, 0}), ValidationError);
    EXPECT_THROW(synth({10, 2, TargetFamily::AdditiveSine, 1.0, -1.0, 0}), ValidationError);
    EXPECT_THROW(synth({10, 2, TargetFamily::AdditiveSine, 0.0, 0.0, 0}), ValidationError);
    EXPECT_THROW(parse_target_family("cubic"), ValidationError);
}

namespace {

Dataset labelled(std::size_t n) {
    Dataset d;
    d.features = Matrix(n, 1);
    LabelTargets y(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.features(i, 0) = static_cast<double>(i);
        y[i] = static_cast<int>(i % 3);
    }
    d.target = y;
    return d;
}

}  // namespace

TEST(Split, SizesAndPartition) {
    const auto data = labelled(10);
    const auto [train, test] = split(data, 0.2, 1);
    EXPECT_EQ(train.rows(), 8u);
    EXPECT_EQ(test.rows(), 2u);

    std::set<double> seen;
    for (const auto* part : {&train, &test})
        for (std::size_t i = 0; i < part->rows(); ++i) {
            const double id = part->features(i, 0);
            EXPECT_TRUE(seen.insert(id).second) << "row " << id << " appears twice";
            EXPECT_EQ(part->labels()[i], static_cast<int>(id) % 3);
        }
    EXPECT_EQ(seen.size(), 10u);
}

TEST(Split, DeterministicUnderSeed) {
    const auto data = labelled(50);
    const auto a = split(data, 0.3, 7);
    const auto b = split(data, 0.3, 7);
    EXPECT_EQ(a.first.features, b.first.features);
    EXPECT_EQ(a.second.features, b.second.features);
    EXPECT_NE(split(data, 0.3, 8).second.features, a.second.features);
}

TEST(Split, DegenerateSizesRejected) {
    const auto data = labelled(10);
    EXPECT_THROW(split(data, 0.0, 1), ValidationError);
    EXPECT_THROW(split(data, 1.0, 1), ValidationError);
    EXPECT_THROW(split(data, 0.01, 1), ValidationError);
    EXPECT_THROW(split(data, 0.99, 1), ValidationError);
}

TEST(Binarize, MapsPositiveLabel) {
    const auto data = labelled(6);
    const auto b = binarize(data, 2);
    EXPECT_EQ(b.labels(), (LabelTargets{0, 0, 1, 0, 0, 1}));
    EXPECT_THROW(binarize(data, 5), ValidationError);
}

TEST(Csv, RoundTrip) {
    TempDir dir;
    const auto s = synth({25, 3, TargetFamily::ProductCosine, 1.0, 0.1, 3});
    write_csv(dir / "a.csv", s.data);
    const auto back = read_csv(dir / "a.csv", false);
    EXPECT_EQ(back.features, s.data.features);
    EXPECT_EQ(back.responses(), s.data.responses());

    const auto lab = labelled(9);
    write_csv(dir / "b.csv", lab);
    EXPECT_EQ(read_csv(dir / "b.csv", true).labels(), lab.labels());
    write_csv(dir / "c.csv", lab);
    EXPECT_EQ(bytes_of(dir / "b.csv"), bytes_of(dir / "c.csv"));
}

TEST(Csv, MalformedInput) {
    TempDir dir;
    {
        std::ofstream out(dir / "bad.csv");
        out << "x0,y\n1,2\n3\n";
    }
    EXPECT_THROW(read_csv(dir / "bad.csv", false), ShapeError);
    {
        std::ofstream out(dir / "nan.csv");
        out << "x0,y\nnan,2\n";
    }
    EXPECT_THROW(read_csv(dir / "nan.csv", false), ValidationError);
    EXPECT_THROW(read_csv(dir / "missing.csv", false), IoError);
}
