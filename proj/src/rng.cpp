#include "bpr/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "bpr/error.hpp"

namespace bpr {

std::size_t Rng::uniform_index(std::size_t bound) {
    if (bound == 0) throw ValidationError("uniform_index: bound must be positive");
    const std::uint64_t b = bound;
    // Rejection on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % b);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t population, std::size_t count) {
    if (count > population) throw ValidationError("cannot sample more items than the population holds");
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + uniform_index(population - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace bpr
