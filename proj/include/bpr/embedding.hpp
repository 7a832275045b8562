#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bpr/matrix.hpp"

namespace bpr {

enum class EmbeddingMode { TensorProduct, TotalDegree, Partitioned };

std::string to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(const std::string& text);

using FeatureGroups = std::vector<std::vector<std::size_t>>;

/// Declarative description of a polynomial feature map.
///
/// TensorProduct builds every monomial with per-feature exponent <= degree,
/// TotalDegree every monomial with exponent sum <= degree, and Partitioned a
/// tensor-product block per group with no cross-group interactions. The
/// intercept is never counted as a monomial.
struct EmbeddingSpec {
    EmbeddingMode mode = EmbeddingMode::TotalDegree;
    int degree = 2;
    FeatureGroups groups;  // Partitioned only
    bool include_intercept = false;

    /// Throws ValidationError unless the spec is usable on inputs of width d.
    void validate(std::size_t d) const;

    friend bool operator==(const EmbeddingSpec&, const EmbeddingSpec&) = default;
};

/// Flat `key = value` text form (mode, degree, groups, intercept).
std::string to_config_text(const EmbeddingSpec& spec);
EmbeddingSpec embedding_spec_from_config_text(const std::string& text);

/// A monomial as (feature index, exponent >= 1) pairs in ascending feature order.
struct MonomialIndex {
    std::vector<std::pair<std::size_t, int>> factors;

    int total_degree() const;
    friend bool operator==(const MonomialIndex&, const MonomialIndex&) = default;
};

/// Number of monomials (intercept excluded). Throws DimensionOverflow when the
/// count does not fit in a signed 64-bit integer.
std::int64_t embed_dim(const EmbeddingSpec& spec, std::size_t d);

/// (J+1)^d - 1 and C(d+J, J) - 1 with overflow checks.
std::int64_t tensor_product_dim(std::size_t d, int degree);
std::int64_t total_degree_dim(std::size_t d, int degree);

/// Monomials in canonical order: lexicographic over the (feature, exponent)
/// sequence, a prefix sorting before its extensions. For TensorProduct with
/// d=2, J=2 this is x1, x1x2, x1x2^2, x1^2, x1^2x2, x1^2x2^2, x2, x2^2.
std::vector<MonomialIndex> enumerate_monomials(const EmbeddingSpec& spec, std::size_t d);

inline constexpr std::int64_t kDefaultEmbeddingCap = 1'000'000;

/// Precompiled evaluator for one spec and input width. Each monomial is
/// evaluated as its canonical prefix times one feature power, so an entry
/// equals the left-to-right product of its factors' powers.
class PolynomialEmbedder {
public:
    PolynomialEmbedder(EmbeddingSpec spec, std::size_t input_dim, std::int64_t cap = kDefaultEmbeddingCap);

    const EmbeddingSpec& spec() const noexcept { return spec_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t monomial_count() const noexcept { return steps_.size(); }
    /// Monomials plus the intercept slot when enabled.
    std::size_t output_dim() const noexcept { return steps_.size() + (spec_.include_intercept ? 1 : 0); }

    /// Writes output_dim() values; the intercept, when enabled, comes last.
    void embed(std::span<const double> x, std::span<double> out) const;
    std::vector<double> embed(std::span<const double> x) const;
    /// Same values as embed() with zeros dropped. A zero monomial zeroes its
    /// whole subtree, which is skipped. `scratch` needs output_dim() slots.
    void embed_sparse(std::span<const double> x, std::span<double> scratch, SparseRow& out) const;

    std::vector<MonomialIndex> monomials() const;

private:
    struct Step {
        std::int64_t parent;  // -1 for the empty product
        std::uint32_t feature;
        std::uint32_t exponent;
        std::uint32_t subtree_end;  // one past the last descendant
    };

    EmbeddingSpec spec_;
    std::size_t input_dim_;
    std::vector<Step> steps_;
};

/// Convenience wrapper around PolynomialEmbedder.
std::vector<double> embed(const EmbeddingSpec& spec, std::span<const double> x,
                          std::int64_t cap = kDefaultEmbeddingCap);

/// Splits `active_indices` into `groups` blocks whose sizes differ by at most
/// one (larger blocks first). Without a seed the blocks are contiguous in the
/// given order; with a seed the indices are shuffled first. Each block is
/// returned sorted.
FeatureGroups make_partition(std::span<const std::size_t> active_indices, std::size_t groups,
                             std::optional<std::uint64_t> shuffle_seed = std::nullopt);

}  // namespace bpr
