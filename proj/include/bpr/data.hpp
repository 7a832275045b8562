#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bpr/error.hpp"
#include "bpr/matrix.hpp"

namespace bpr {

struct DatasetMeta {
    std::string source;
    std::string normalization = "none";
    std::optional<std::uint64_t> seed;
};

using RealTargets = std::vector<double>;
using LabelTargets = std::vector<int>;

/// Dense n x d features with either real responses or integer class labels.
struct Dataset {
    Matrix features;
    std::variant<RealTargets, LabelTargets> target;
    DatasetMeta meta;

    std::size_t rows() const noexcept { return features.rows(); }
    std::size_t cols() const noexcept { return features.cols(); }
    bool has_labels() const noexcept { return std::holds_alternative<LabelTargets>(target); }
    const LabelTargets& labels() const;
    const RealTargets& responses() const;
    /// Targets widened to double regardless of kind.
    std::vector<double> target_values() const;
    /// Sorted distinct labels.
    std::vector<int> label_set() const;

    Dataset subset(std::span<const std::size_t> rows) const;
    void validate() const;
};

// IDX container (big-endian header, unsigned-byte payload).

enum class IdxErrorKind { BadMagic, Truncated, CountMismatch };

class IdxFormatError : public IoError {
public:
    IdxFormatError(IdxErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
    IdxErrorKind kind() const noexcept { return kind_; }

private:
    IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Loads an image/label pair; pixels are divided by 255 into [0, 1].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// Synthetic data under y = g(x) + eps, x ~ U[0,1]^d, eps ~ N(0, sigma^2).

enum class TargetFamily { AdditiveSine, ProductCosine, PolynomialTruth };

std::string to_string(TargetFamily family);
TargetFamily parse_target_family(const std::string& text);

struct SynthSpec {
    std::size_t n = 1000;
    std::size_t d = 4;
    TargetFamily target_family = TargetFamily::AdditiveSine;
    double smoothness_scale = 1.0;  // frequency multiplier of the trigonometric families
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

using TruthFunction = std::function<double(std::span<const double>)>;

/// AdditiveSine: sum_j sin(2 pi c x_j) / d. ProductCosine: prod_j cos(pi c x_j).
/// PolynomialTruth: x_1^2. c is smoothness_scale.
TruthFunction target_function(TargetFamily family, std::size_t d, double smoothness_scale = 1.0);

struct SyntheticData {
    Dataset data;
    TruthFunction truth;
};

SyntheticData synth(const SynthSpec& spec);

/// Seeded shuffle into disjoint train/test parts; each part keeps the
/// original row order. The test part has round(n * test_fraction) rows.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// positive_label -> 1, every other label -> 0.
Dataset binarize(const Dataset& data, int positive_label);

/// CSV with a header row; the last column is the target.
void write_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_csv(const std::filesystem::path& path, bool integer_labels);

}  // namespace bpr
