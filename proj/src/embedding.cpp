#include "bpr/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bpr/error.hpp"
#include "bpr/rng.hpp"

namespace bpr {

namespace {

constexpr std::int64_t kMaxCount = std::numeric_limits<std::int64_t>::max();

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw DimensionOverflow("dimension overflow: monomial count exceeds 2^63-1");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw DimensionOverflow("dimension overflow: monomial count exceeds 2^63-1");
    return r;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(EmbeddingMode mode) {
    switch (mode) {
        case EmbeddingMode::TensorProduct: return "tensor_product";
        case EmbeddingMode::TotalDegree: return "total_degree";
        case EmbeddingMode::Partitioned: return "partitioned";
    }
    return "unknown";
}

EmbeddingMode parse_embedding_mode(const std::string& text) {
    if (text == "tensor_product" || text == "tensor") return EmbeddingMode::TensorProduct;
    if (text == "total_degree" || text == "total") return EmbeddingMode::TotalDegree;
    if (text == "partitioned") return EmbeddingMode::Partitioned;
    throw ValidationError("unknown embedding mode '" + text + "'");
}

int MonomialIndex::total_degree() const {
    int sum = 0;
    for (const auto& [feature, exponent] : factors) sum += exponent;
    return sum;
}

void EmbeddingSpec::validate(std::size_t d) const {
    require(d >= 1, "embedding input width must be at least 1");
    require(degree >= 1, "embedding degree must be at least 1");
    if (mode != EmbeddingMode::Partitioned) {
        require(groups.empty(), "groups are only meaningful in partitioned mode");
        return;
    }
    require(!groups.empty(), "partitioned embedding needs at least one group");
    std::vector<char> seen(d, 0);
    std::size_t total = 0;
    std::size_t min_size = std::numeric_limits<std::size_t>::max();
    std::size_t max_size = 0;
    for (const auto& group : groups) {
        require(!group.empty(), "partition groups must be non-empty");
        min_size = std::min(min_size, group.size());
        max_size = std::max(max_size, group.size());
        for (auto idx : group) {
            require(idx < d, "partition index " + std::to_string(idx) + " out of range");
            require(!seen[idx], "partition groups overlap at index " + std::to_string(idx));
            seen[idx] = 1;
            ++total;
        }
    }
    require(total == d, "partition groups do not cover every input feature");
    require(max_size - min_size <= 1, "partition group sizes differ by more than one");
}

std::string to_config_text(const EmbeddingSpec& spec) {
    std::ostringstream os;
    os << "mode = " << to_string(spec.mode) << "\n";
    os << "degree = " << spec.degree << "\n";
    os << "groups = ";
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        if (g) os << ';';
        for (std::size_t i = 0; i < spec.groups[g].size(); ++i) {
            if (i) os << ' ';
            os << spec.groups[g][i];
        }
    }
    os << "\n";
    os << "intercept = " << (spec.include_intercept ? "true" : "false") << "\n";
    return os.str();
}

EmbeddingSpec embedding_spec_from_config_text(const std::string& text) {
    EmbeddingSpec spec;
    std::istringstream is(text);
    std::string line;
    bool have_mode = false;
    bool have_degree = false;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("malformed embedding line: " + line);
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key == "mode") {
            spec.mode = parse_embedding_mode(value);
            have_mode = true;
        } else if (key == "degree") {
            try {
                spec.degree = std::stoi(value);
            } catch (const std::exception&) {
                throw ValidationError("embedding degree is not an integer: " + value);
            }
            have_degree = true;
        } else if (key == "groups") {
            spec.groups.clear();
            std::istringstream gs(value);
            std::string group_text;
            while (std::getline(gs, group_text, ';')) {
                std::istringstream ms(group_text);
                std::vector<std::size_t> group;
                std::size_t idx;
                while (ms >> idx) group.push_back(idx);
                if (!ms.eof()) throw ValidationError("malformed group list: " + value);
                if (!group.empty()) spec.groups.push_back(std::move(group));
            }
        } else if (key == "intercept") {
            if (value == "true" || value == "1") spec.include_intercept = true;
            else if (value == "false" || value == "0") spec.include_intercept = false;
            else throw ValidationError("intercept must be true or false");
        } else {
            throw ValidationError("unknown embedding key '" + key + "'");
        }
    }
    require(have_mode && have_degree, "embedding config needs both mode and degree");
    return spec;
}

std::int64_t tensor_product_dim(std::size_t d, int degree) {
    require(degree >= 1, "embedding degree must be at least 1");
    std::int64_t count = 1;
    const std::int64_t base = static_cast<std::int64_t>(degree) + 1;
    for (std::size_t i = 0; i < d; ++i) count = checked_mul(count, base);
    return count - 1;
}

std::int64_t total_degree_dim(std::size_t d, int degree) {
    require(degree >= 1, "embedding degree must be at least 1");
    if (d > static_cast<std::size_t>(kMaxCount)) throw DimensionOverflow("dimension overflow: input width too large");
    // C(d+i, i) = C(d+i-1, i-1) * (d+i) / i, exact at every step.
    __int128 c = 1;
    for (int i = 1; i <= degree; ++i) {
        c = c * static_cast<__int128>(d + static_cast<std::size_t>(i)) / i;
        if (c > static_cast<__int128>(kMaxCount)) throw DimensionOverflow("dimension overflow: monomial count exceeds 2^63-1");
    }
    return static_cast<std::int64_t>(c) - 1;
}

std::int64_t embed_dim(const EmbeddingSpec& spec, std::size_t d) {
    spec.validate(d);
    switch (spec.mode) {
        case EmbeddingMode::TensorProduct: return tensor_product_dim(d, spec.degree);
        case EmbeddingMode::TotalDegree: return total_degree_dim(d, spec.degree);
        case EmbeddingMode::Partitioned: {
            std::int64_t sum = 0;
            for (const auto& group : spec.groups) sum = checked_add(sum, tensor_product_dim(group.size(), spec.degree));
            return sum;
        }
    }
    throw ValidationError("unknown embedding mode");
}

PolynomialEmbedder::PolynomialEmbedder(EmbeddingSpec spec, std::size_t input_dim, std::int64_t cap)
    : spec_(std::move(spec)), input_dim_(input_dim) {
    const std::int64_t dim = embed_dim(spec_, input_dim_);
    const std::int64_t entries = dim + (spec_.include_intercept ? 1 : 0);
    if (entries > cap)
        throw ValidationError("embedding dimension " + std::to_string(entries) + " exceeds the cap of " +
                              std::to_string(cap) + " entries");
    steps_.reserve(static_cast<std::size_t>(dim));

    const bool total = spec_.mode == EmbeddingMode::TotalDegree;
    const int max_degree = spec_.degree;
    // Depth-first walk: emit x_f^e, then every extension by later features.
    auto walk = [&](auto&& self, const std::vector<std::size_t>& features, std::size_t start, std::int64_t parent,
                    int remaining) -> void {
        for (std::size_t pos = start; pos < features.size(); ++pos) {
            const int max_e = total ? remaining : max_degree;
            for (int e = 1; e <= max_e; ++e) {
                steps_.push_back({parent, static_cast<std::uint32_t>(features[pos]), static_cast<std::uint32_t>(e), 0});
                const auto here = static_cast<std::int64_t>(steps_.size() - 1);
                self(self, features, pos + 1, here, remaining - e);
                steps_[static_cast<std::size_t>(here)].subtree_end = static_cast<std::uint32_t>(steps_.size());
            }
        }
    };

    if (spec_.mode == EmbeddingMode::Partitioned) {
        for (auto group : spec_.groups) {
            std::sort(group.begin(), group.end());
            walk(walk, group, 0, -1, max_degree);
        }
    } else {
        std::vector<std::size_t> all(input_dim_);
        std::iota(all.begin(), all.end(), std::size_t{0});
        walk(walk, all, 0, -1, max_degree);
    }
}

void PolynomialEmbedder::embed(std::span<const double> x, std::span<double> out) const {
    if (x.size() != input_dim_) throw ShapeError("embedding input has width " + std::to_string(x.size()) +
                                                 ", expected " + std::to_string(input_dim_));
    if (out.size() != output_dim()) throw ShapeError("embedding output buffer has the wrong size");
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("non-finite value in embedding input");

    for (std::size_t t = 0; t < steps_.size(); ++t) {
        const Step& s = steps_[t];
        const double base = x[s.feature];
        double power = base;
        for (std::uint32_t e = 1; e < s.exponent; ++e) power *= base;
        out[t] = s.parent < 0 ? power : out[static_cast<std::size_t>(s.parent)] * power;
    }
    if (spec_.include_intercept) out[steps_.size()] = 1.0;
}

void PolynomialEmbedder::embed_sparse(std::span<const double> x, std::span<double> scratch, SparseRow& out) const {
    if (x.size() != input_dim_) throw ShapeError("embedding input has width " + std::to_string(x.size()) +
                                                 ", expected " + std::to_string(input_dim_));
    if (scratch.size() < output_dim()) throw ShapeError("embedding scratch buffer is too small");
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("non-finite value in embedding input");

    out.clear();
    std::size_t t = 0;
    while (t < steps_.size()) {
        const Step& s = steps_[t];
        const double base = x[s.feature];
        double power = base;
        for (std::uint32_t e = 1; e < s.exponent; ++e) power *= base;
        const double v = s.parent < 0 ? power : scratch[static_cast<std::size_t>(s.parent)] * power;
        if (v == 0.0) {
            t = s.subtree_end;
            continue;
        }
        scratch[t] = v;
        out.push(t, v);
        ++t;
    }
    if (spec_.include_intercept) out.push(steps_.size(), 1.0);
}

std::vector<double> PolynomialEmbedder::embed(std::span<const double> x) const {
    std::vector<double> out(output_dim());
    embed(x, out);
    return out;
}

std::vector<MonomialIndex> PolynomialEmbedder::monomials() const {
    std::vector<MonomialIndex> out(steps_.size());
    for (std::size_t t = 0; t < steps_.size(); ++t) {
        const Step& s = steps_[t];
        if (s.parent >= 0) out[t] = out[static_cast<std::size_t>(s.parent)];
        out[t].factors.emplace_back(s.feature, static_cast<int>(s.exponent));
    }
    return out;
}

std::vector<MonomialIndex> enumerate_monomials(const EmbeddingSpec& spec, std::size_t d) {
    return PolynomialEmbedder(spec, d, kMaxCount).monomials();
}

std::vector<double> embed(const EmbeddingSpec& spec, std::span<const double> x, std::int64_t cap) {
    return PolynomialEmbedder(spec, x.size(), cap).embed(x);
}

FeatureGroups make_partition(std::span<const std::size_t> active_indices, std::size_t groups,
                             std::optional<std::uint64_t> shuffle_seed) {
    const std::size_t d = active_indices.size();
    require(groups >= 1, "partition needs at least one group");
    require(groups <= d, "cannot split " + std::to_string(d) + " features into " + std::to_string(groups) + " groups");
    std::vector<std::size_t> order(active_indices.begin(), active_indices.end());
    if (shuffle_seed) {
        Rng rng(*shuffle_seed);
        rng.shuffle(std::span<std::size_t>(order));
    }
    FeatureGroups out(groups);
    const std::size_t base = d / groups;
    const std::size_t extra = d % groups;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t size = base + (g < extra ? 1 : 0);
        out[g].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(out[g].begin(), out[g].end());
        pos += size;
    }
    return out;
}

}  // namespace bpr
