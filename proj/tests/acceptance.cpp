// Acceptance checks: one PASS/FAIL line per criterion.
//   acceptance [--group fast|mnist|mnist-full|all] [--mnist-dir DIR]

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bpr/bagging.hpp"
#include "bpr/data.hpp"
#include "bpr/embedding.hpp"
#include "bpr/linear_model.hpp"
#include "bpr/rates.hpp"
#include "bpr/rng.hpp"
#include "bpr/serialize.hpp"
#include "bpr/text.hpp"
#include "cli.hpp"
#include "test_support.hpp"

using namespace bpr;
using bpr::testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, a);
    return buf;
}

// ---------------------------------------------------------------- feature counts

void feature_counts() {
    const auto start = Clock::now();
    const EmbeddingSpec tp{EmbeddingMode::TensorProduct, 2, {}, false};
    const auto tp_dim = embed_dim(tp, 2);

    // Every exponent pair in {0,1,2}^2 except (0,0).
    std::set<std::vector<std::pair<std::size_t, int>>> oracle;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b) {
            if (a == 0 && b == 0) continue;
            std::vector<std::pair<std::size_t, int>> f;
            if (a) f.emplace_back(0, a);
            if (b) f.emplace_back(1, b);
            oracle.insert(f);
        }
    std::set<std::vector<std::pair<std::size_t, int>>> got;
    for (const auto& m : enumerate_monomials(tp, 2)) got.insert(m.factors);

    const EmbeddingSpec td{EmbeddingMode::TotalDegree, 2, {}, false};
    const auto td_dim = embed_dim(td, 80);
    // 1 + 80 linear + 80 squares + C(80,2) cross terms.
    const std::int64_t td_oracle = 1 + 80 + 80 + 80 * 79 / 2;
    const double t = seconds_since(start);
    const bool pass = tp_dim == 8 && got == oracle && td_dim + 1 == td_oracle && td_oracle == 3321 && t < 1.0;
    report("feature-counts", pass,
           "tensor_product(d=2,J=2)=" + std::to_string(tp_dim) + (got == oracle ? " monomial set matches" : " monomial set differs") +
               "; total_degree(d=80,J=2)+1=" + std::to_string(td_dim + 1) + " (expected 3321); " + fmt("%.3fs", t));
}

// ---------------------------------------------------------------- MNIST

struct Mnist {
    Dataset train;
    Dataset test;
};

Mnist load_mnist(const fs::path& dir) {
    return {load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
            load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
}

Dataset head(const Dataset& d, std::size_t n) {
    if (n >= d.rows()) return d;
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return d.subset(rows);
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

BprParams mnist_params(std::size_t F, std::size_t M, int epochs, double lr, double lambda, Task task) {
    BprParams p;
    p.degree = 2;
    p.embedding_mode = EmbeddingMode::TotalDegree;
    p.features_per_model = F;
    p.num_models = M;
    p.ridge_lambda = lambda;
    p.task = task;
    p.master_seed = 1;
    p.sgd.epochs = epochs;
    p.sgd.learning_rate = lr;
    return p;
}

struct BinaryRun {
    double accuracy = 0.0;
    double seconds = 0.0;
};

BinaryRun binary_digit_one(const Mnist& mnist, std::size_t n, const BprParams& p, std::size_t workers) {
    const auto start = Clock::now();
    const auto train = binarize(head(mnist.train, n), 1);
    const auto test = binarize(mnist.test, 1);
    const auto model = train_bpr(train, p, {workers});
    const auto prob = predict_bpr(model, test.features, workers);
    std::vector<int> predicted(prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) predicted[i] = prob[i] > 0.5 ? 1 : 0;
    return {accuracy(predicted, test.labels()), seconds_since(start)};
}

BinaryRun ten_class(const Mnist& mnist, std::size_t n, const BprParams& p, std::size_t workers) {
    const auto start = Clock::now();
    const auto model = train_ovr(head(mnist.train, n), p, {workers});
    const auto pred = predict_ovr(model, mnist.test.features, workers);
    return {accuracy(pred.labels, mnist.test.labels()), seconds_since(start)};
}

void mnist_binary_reduced(const Mnist& mnist, std::size_t workers) {
    const auto r = binary_digit_one(mnist, 10000, mnist_params(40, 20, 10, 0.05, 1e-4, Task::BinaryClassification), workers);
    report("mnist-binary-reduced", r.accuracy >= 0.97 && r.seconds <= 120.0,
           "digit 1 vs rest, n=10000 J=2 F=40 M=20: accuracy " + fmt("%.4f", r.accuracy) + " (>= 0.97), " +
               fmt("%.1fs", r.seconds) + " (<= 120s)");
}

void mnist_binary_full(const Mnist& mnist, std::size_t workers) {
    const auto r = binary_digit_one(mnist, mnist.train.rows(),
                                    mnist_params(40, 100, 3, 0.01, 1e-4, Task::BinaryClassification), workers);
    report("mnist-binary-full", r.accuracy >= 0.98 && r.seconds <= 900.0,
           "digit 1 vs rest, n=60000 J=2 F=40 M=100: accuracy " + fmt("%.4f", r.accuracy) + " (>= 0.98), " +
               fmt("%.1fs", r.seconds) + " (<= 900s)");
}

const BprParams kTenClass = mnist_params(80, 100, 5, 0.05, 1e-4, Task::BinaryClassification);

BprParams with_models(BprParams p, std::size_t M) {
    p.num_models = M;
    return p;
}

void mnist_ten_class_scaled(const Mnist& mnist, std::size_t workers) {
    const auto bagged = ten_class(mnist, 20000, with_models(kTenClass, 30), workers);
    const auto single = ten_class(mnist, 20000, with_models(kTenClass, 1), workers);
    report("mnist-10class-scaled", bagged.accuracy >= 0.94 && bagged.accuracy > single.accuracy,
           "one-vs-rest, n=20000 J=2 F=80 M=30: accuracy " + fmt("%.4f", bagged.accuracy) + " (>= 0.94), " +
               fmt("%.1fs", bagged.seconds) + "; single-model baseline (M=1, same embedding) " +
               fmt("%.4f", single.accuracy) + " (must be lower)");
}

void mnist_ten_class_full(const Mnist& mnist, std::size_t workers) {
    const auto bagged = ten_class(mnist, mnist.train.rows(), kTenClass, workers);
    const auto single = ten_class(mnist, mnist.train.rows(), with_models(kTenClass, 1), workers);
    report("mnist-10class-full", bagged.accuracy >= 0.96 && bagged.seconds <= 5400.0 && bagged.accuracy > single.accuracy,
           "one-vs-rest, n=60000 J=2 F=80 M=100: accuracy " + fmt("%.4f", bagged.accuracy) + " (>= 0.96), " +
               fmt("%.1fs", bagged.seconds) + " (<= 5400s); single-model baseline (M=1, same embedding) " +
               fmt("%.4f", single.accuracy) + " (must be lower)");
}

// ---------------------------------------------------------------- rates

void rates_monotonicity() {
    const auto start = Clock::now();
    Rng rng(20240501);
    std::size_t points = 0, g_bad = 0, ck_bad = 0, audited = 0, opt_bad = 0, infeasible = 0;
    std::string ck_example;
    while (points < 500) {
        rates::RateParams p;
        p.n = std::pow(10.0, 2.0 + 10.0 * rng.uniform());
        p.d = 2 + rng.uniform_index(49);
        p.J = 1 + static_cast<int>(rng.uniform_index(15));
        p.s = 0.1 + (static_cast<double>(p.d) - 0.1) * rng.uniform();
        p.t = 0.001 + 0.998 * rng.uniform();
        p.B = 1 + rng.uniform_index(p.d - 1);
        ++points;

        const double g0 = rates::rate_G(p).total;
        auto q = p;
        ++q.B;
        if (rates::rate_G(q).total > g0 + 1e-12) ++g_bad;
        const double c0 = rates::approx_bound_ck(p.d, p.J, p.s, p.B);
        const double c1 = rates::approx_bound_ck(q.d, q.J, q.s, q.B);
        if (c1 < c0 - 1e-12) {
            if (ck_bad++ == 0)
                ck_example = "e.g. d=" + std::to_string(p.d) + " J=" + std::to_string(p.J) + " s=" + format_double(p.s) +
                             " B=" + std::to_string(p.B) + "->" + std::to_string(q.B) + ": " + format_double(c0) +
                             " -> " + format_double(c1);
        }

        // Independent brute force: largest feasible B and argmin of G over the feasible set.
        try {
            const auto opt = rates::optimal_B(p.n, p.d, p.J, p.s, p.t);
            ++audited;
            std::size_t largest = 0, argmin = 0;
            double best = INFINITY;
            for (std::size_t B = 1; B <= p.d; ++B) {
                if (rates::partition_constraint(p.d, p.J, p.s, B) > p.t / 2.0) continue;
                largest = B;
                auto r = p;
                r.B = B;
                const double g = rates::rate_G(r).total;
                if (g <= best) {
                    best = g;
                    argmin = B;
                }
            }
            if (opt.b_star != largest || opt.b_star != argmin || std::abs(opt.g_at_b_star - best) > 1e-12) ++opt_bad;
        } catch (const rates::NoFeasiblePartition&) {
            ++infeasible;
        }
    }
    const double t = seconds_since(start);
    report("rates-monotonicity", g_bad == 0 && ck_bad == 0 && opt_bad == 0 && t < 10.0,
           "500 random points: G(B+1) > G(B) in " + std::to_string(g_bad) + "; c_k(B+1) < c_k(B) in " +
               std::to_string(ck_bad) + (ck_example.empty() ? "" : " (" + ck_example + ")") + "; optimal_B vs brute force mismatches " +
               std::to_string(opt_bad) + "/" + std::to_string(audited) + " (" + std::to_string(infeasible) +
               " without a feasible B); " + fmt("%.2fs", t));
}

struct CsvRow {
    double x;
    std::string series;
    double mean;
};

std::vector<CsvRow> read_sweep(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        const auto f = split(line, ',');
        rows.push_back({parse_double(f[1]), f[2], parse_double(f[3])});
    }
    return rows;
}

bool emit(const fs::path& dir, std::vector<std::string> args) {
    std::ostringstream out, err;
    args.insert(args.begin(), "rates");
    args.push_back("--out-dir");
    args.push_back(dir.string());
    return bpr::cli::run(args, out, err) == 0;
}

void rate_panels() {
    const auto start = Clock::now();
    TempDir dir;
    std::vector<std::string> notes;
    bool pass = emit(dir.path(), {"--panel", "a", "--s", "5"}) && emit(dir.path(), {"--panel", "b", "--d", "40"}) &&
                emit(dir.path(), {"--panel", "c", "--J", "3", "--n", "1e7", "--s", "5", "--t", "0.05"}) &&
                emit(dir.path(), {"--panel", "d", "--d-lo", "40", "--d-hi", "40"});
    if (!pass) {
        report("rate-panels", false, "rates command failed");
        return;
    }
    auto monotone = [&](const std::string& panel, const char* what) {
        std::map<std::string, std::vector<CsvRow>> series;
        for (const auto& r : read_sweep(dir / ("rates_" + panel + ".csv"))) series[r.series].push_back(r);
        std::size_t bad = 0;
        for (auto& [name, rows] : series) {
            std::sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) { return a.x < b.x; });
            for (std::size_t i = 1; i < rows.size(); ++i) bad += rows[i].mean < rows[i - 1].mean;
        }
        notes.push_back("(" + panel + ") B* non-decreasing in " + what + ": " + (bad ? "no" : "yes"));
        return bad == 0 && !series.empty();
    };
    pass = monotone("a", "J") && pass;
    pass = monotone("b", "s") && pass;

    std::map<double, double> b1, b10;
    for (const auto& r : read_sweep(dir / "rates_c.csv")) {
        if (r.series == "B=1") b1[r.x] = r.mean;
        if (r.series == "B=10") b10[r.x] = r.mean;
    }
    bool c_ok = !b10.empty();
    for (const auto& [d, v] : b10)
        if (d >= 20) c_ok = c_ok && b1.count(d) && b1[d] >= v;
    notes.push_back(std::string("(c) rate(B=1) >= rate(B=10) for d >= 20: ") + (c_ok ? "yes" : "no"));

    bool d_ok = true;
    double largest = -1.0;
    for (const auto& r : read_sweep(dir / "rates_d.csv")) {
        if (r.series == "B=1" && r.x <= 1e8) d_ok = d_ok && r.mean == 1.0;
        if (r.series == "B=40" && r.x == 1e8) largest = r.mean;
    }
    d_ok = d_ok && largest >= 0.0 && largest < 0.5;
    notes.push_back(std::string("(d) B=1 stays at 1.0 through n=1e8: ") + (d_ok ? "yes" : "no") +
                    ", B=40 at n=1e8: " + format_double(largest));
    const double t = seconds_since(start);
    std::string detail;
    for (const auto& n : notes) detail += n + "; ";
    report("rate-panels", pass && c_ok && d_ok && t < 30.0, detail + fmt("%.2fs", t));
}

// ---------------------------------------------------------------- optimizers

struct Problem {
    Matrix x;
    std::vector<double> y;
};

Problem random_problem(std::mt19937_64& gen, std::size_t n, std::size_t k) {
    std::normal_distribution<double> normal;
    Problem p{Matrix(n, k), std::vector<double>(n)};
    std::vector<double> beta(k);
    for (auto& b : beta) b = normal(gen);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.5;
        for (std::size_t j = 0; j < k; ++j) {
            p.x(i, j) = normal(gen) * (1.0 + 0.5 * j) + 0.1 * j;
            s += beta[j] * p.x(i, j);
        }
        p.y[i] = s + 0.3 * normal(gen);
    }
    return p;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += (a[j] - b[j]) * (a[j] - b[j]);
        den += b[j] * b[j];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

void optimizer_oracles() {
    const auto start = Clock::now();
    std::mt19937_64 gen(99);
    double worst_ridge = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t k = 1 + gen() % 12;
        const std::size_t n = 3 * k + 10 + gen() % 90;
        const double lambda = std::array<double, 4>{0.0, 0.01, 0.1, 1.0}[instance % 4];
        const auto p = random_problem(gen, n, k);
        const auto exact = fit_ridge_closed_form(p.x, p.y, lambda, {.fit_intercept = true, .standardize = true});
        SgdConfig c;
        c.batch_size = n;
        c.schedule = LearningRateSchedule::Constant;
        c.learning_rate = 0.5 / (static_cast<double>(k) + lambda);
        c.epochs = 20000;
        c.ridge_lambda = lambda;
        c.seed = static_cast<std::uint64_t>(instance);
        const auto sgd = fit_ridge_sgd(p.x, p.y, c);
        worst_ridge = std::max(worst_ridge, relative_error(sgd.weights, exact.weights));
    }

    std::normal_distribution<double> normal;
    double worst_grad = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        const std::size_t k = 2 + gen() % 5;
        auto p = random_problem(gen, 30 + gen() % 30, k);
        std::vector<double> labels(p.y.size());
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = p.y[i] > 0.5 ? 1.0 : 0.0;
        for (int point = 0; point < 5; ++point) {
            std::vector<double> w(k);
            for (auto& v : w) v = 0.5 * normal(gen);
            const double b = 0.5 * normal(gen);
            const double lambda = 0.1;
            const auto analytic = logistic_objective(p.x, labels, w, b, lambda);
            const double h = 1e-6;
            std::vector<double> fd(k + 1), an(k + 1);
            for (std::size_t j = 0; j < k; ++j) {
                auto up = w, down = w;
                up[j] += h;
                down[j] -= h;
                fd[j] = (logistic_objective(p.x, labels, up, b, lambda).loss -
                         logistic_objective(p.x, labels, down, b, lambda).loss) /
                        (2 * h);
                an[j] = analytic.grad_weights[j];
            }
            fd[k] = (logistic_objective(p.x, labels, w, b + h, lambda).loss -
                     logistic_objective(p.x, labels, w, b - h, lambda).loss) /
                    (2 * h);
            an[k] = analytic.grad_intercept;
            worst_grad = std::max(worst_grad, relative_error(an, fd));
        }
    }
    const double t = seconds_since(start);
    report("optimizer-oracles", worst_ridge <= 1e-3 && worst_grad <= 1e-5 && t < 60.0,
           "SGD vs closed-form ridge, 100 instances: worst relative weight error " + fmt("%.2e", worst_ridge) +
               " (<= 1e-3); logistic gradient vs central differences, 20 instances x 5 points: worst " +
               fmt("%.2e", worst_grad) + " (<= 1e-5); " + fmt("%.2fs", t));
}

// ---------------------------------------------------------------- degeneracy and determinism

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void degeneracy_and_determinism() {
    const auto data = synth({200, 3, TargetFamily::ProductCosine, 1.0, 0.1, 4}).data;
    const auto test = synth({60, 3, TargetFamily::ProductCosine, 1.0, 0.1, 5}).data;

    BprParams p;
    p.degree = 2;
    p.features_per_model = 3;
    p.num_models = 1;
    p.master_seed = 31;
    p.sgd.epochs = 20;
    const auto bagged = predict_bpr(train_bpr(data, p), test.features);

    const PolynomialEmbedder e(p.sub_model_embedding(), 3);
    auto embed_rows = [&](const Matrix& x) {
        Matrix out(x.rows(), e.output_dim());
        for (std::size_t i = 0; i < x.rows(); ++i) e.embed(x.row(i), out.row(i));
        return out;
    };
    SgdConfig sgd = p.sgd;
    sgd.seed = sub_model_sgd_seed(sub_model_seed(p.master_seed, 0));
    const auto plain = predict_linear(fit_ridge_sgd(embed_rows(data.features), data.responses(), sgd),
                                      embed_rows(test.features));
    double worst = 0.0;
    for (std::size_t i = 0; i < plain.size(); ++i) worst = std::max(worst, std::abs(bagged[i] - plain[i]));

    BprParams q = p;
    q.features_per_model = 2;
    q.num_models = 9;
    q.sample_size = 150;
    q.ridge_lambda = 1e-3;
    const auto serial = model_to_json(train_bpr(data, q, {1}));
    const bool rerun_same = serial == model_to_json(train_bpr(data, q, {1}));
    bool parallel_same = true;
    for (std::size_t workers : {2u, 4u}) parallel_same = parallel_same && serial == model_to_json(train_bpr(data, q, {workers}));

    // Whole pipeline through the command line, twice from the same resolved config.
    TempDir dir;
    std::ostringstream out, err;
    const std::string csv = (dir / "synth.csv").string();
    bool pipeline = bpr::cli::run({"data", "synth", "--n", "300", "--d", "4", "--seed", "8", "--sigma", "0.1", "--out-dir",
                                   dir.path().string()},
                                  out, err) == 0;
    for (const char* run : {"a", "b"}) {
        pipeline = pipeline &&
                   bpr::cli::run({"train", "--csv", csv, "--features", "2", "--models", "5", "--sample-size", "200",
                                  "--epochs", "5", "--seed", "3", "--workers", run[0] == 'a' ? "1" : "3", "--out-dir",
                                  (dir / run).string()},
                                 out, err) == 0 &&
                   bpr::cli::run({"predict", "--csv", csv, "--model", (dir / run / "model.json").string(), "--out-dir",
                                  (dir / run).string()},
                                 out, err) == 0;
    }
    pipeline = pipeline && slurp(dir / "a" / "model.json") == slurp(dir / "b" / "model.json") &&
               slurp(dir / "a" / "predictions.csv") == slurp(dir / "b" / "predictions.csv");

    report("degeneracy-determinism", worst <= 1e-9 && rerun_same && parallel_same && pipeline,
           "M=1,F=d,S=n,lambda=0 vs single polynomial regression: max |diff| " + fmt("%.2e", worst) +
               " (<= 1e-9); rerun identical: " + (rerun_same ? "yes" : "no") + "; serial vs 2/4 workers identical: " +
               (parallel_same ? "yes" : "no") + "; CLI pipeline rerun byte-identical: " + (pipeline ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks", "acceptance"};
    std::string group = "fast";
    std::string mnist_path;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--group", group, "fast, mnist, mnist-full or all")
        ->check(CLI::IsMember({"fast", "mnist", "mnist-full", "all"}));
    app.add_option("--mnist-dir", mnist_path, "directory with the four MNIST IDX files");
    app.add_option("--workers", workers, "worker threads for MNIST training");
    CLI11_PARSE(app, argc, argv);

    const bool all = group == "all";
    if (all || group == "fast") {
        feature_counts();
        rates_monotonicity();
        rate_panels();
        optimizer_oracles();
        degeneracy_and_determinism();
    }
    if (all || group == "fast" || group == "mnist" || group == "mnist-full") {
        std::optional<fs::path> dir = mnist_path.empty() ? bpr::testing::mnist_dir() : std::optional<fs::path>(mnist_path);
        if (!dir) {
            report("mnist-data", false, "MNIST IDX files not found (set BPR_MNIST_DIR)");
            return 1;
        }
        const auto mnist = load_mnist(*dir);
        if (all || group == "fast") mnist_binary_reduced(mnist, workers);
        if (all || group == "mnist") {
            mnist_binary_full(mnist, workers);
            mnist_ten_class_scaled(mnist, workers);
        }
        if (all || group == "mnist-full") mnist_ten_class_full(mnist, workers);
    }
    std::printf("%d failed\n", failures);
    return failures == 0 ? 0 : 1;
}
