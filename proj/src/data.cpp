#include "bpr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "bpr/rng.hpp"
#include "bpr/text.hpp"

namespace bpr {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::filesystem::path& path) {
    if (bytes.size() < offset + 4)
        throw IdxFormatError(IdxErrorKind::Truncated, "truncated IDX header in '" + path.string() + "'");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

std::string hex(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

}  // namespace

const LabelTargets& Dataset::labels() const {
    if (!has_labels()) throw ValidationError("dataset has real-valued targets, not labels");
    return std::get<LabelTargets>(target);
}

const RealTargets& Dataset::responses() const {
    if (has_labels()) throw ValidationError("dataset has class labels, not real-valued targets");
    return std::get<RealTargets>(target);
}

std::vector<double> Dataset::target_values() const {
    if (has_labels()) {
        const auto& l = labels();
        return {l.begin(), l.end()};
    }
    return responses();
}

std::vector<int> Dataset::label_set() const {
    const auto& l = labels();
    std::set<int> s(l.begin(), l.end());
    return {s.begin(), s.end()};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = features.select_rows(rows);
    out.meta = meta;
    std::visit(
        [&](const auto& t) {
            std::decay_t<decltype(t)> picked;
            picked.reserve(rows.size());
            for (auto r : rows) picked.push_back(t[r]);
            out.target = std::move(picked);
        },
        target);
    return out;
}

void Dataset::validate() const {
    const std::size_t n = std::visit([](const auto& t) { return t.size(); }, target);
    if (n != features.rows())
        throw ShapeError("dataset has " + std::to_string(features.rows()) + " feature rows but " + std::to_string(n) +
                         " targets");
    for (double v : features.data())
        if (!std::isfinite(v)) throw ValidationError("dataset contains non-finite feature values");
    if (!has_labels())
        for (double v : responses())
            if (!std::isfinite(v)) throw ValidationError("dataset contains non-finite targets");
}

IdxImages read_idx_images(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto magic = read_be32(bytes, 0, path);
    if (magic != kIdxImagesMagic)
        throw IdxFormatError(IdxErrorKind::BadMagic,
                             "bad IDX image magic " + hex(magic) + " in '" + path.string() + "' (expected 0x803)");
    IdxImages img;
    img.count = read_be32(bytes, 4, path);
    img.rows = read_be32(bytes, 8, path);
    img.cols = read_be32(bytes, 12, path);
    const std::size_t payload = std::size_t{img.count} * img.rows * img.cols;
    if (bytes.size() < 16 + payload)
        throw IdxFormatError(IdxErrorKind::Truncated, "truncated IDX image payload in '" + path.string() + "'");
    img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto magic = read_be32(bytes, 0, path);
    if (magic != kIdxLabelsMagic)
        throw IdxFormatError(IdxErrorKind::BadMagic,
                             "bad IDX label magic " + hex(magic) + " in '" + path.string() + "' (expected 0x801)");
    const std::size_t count = read_be32(bytes, 4, path);
    if (bytes.size() < 8 + count)
        throw IdxFormatError(IdxErrorKind::Truncated, "truncated IDX label payload in '" + path.string() + "'");
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols)
        throw ShapeError("IDX image payload does not match its header");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    put_be32(out, kIdxImagesMagic);
    put_be32(out, images.count);
    put_be32(out, images.rows);
    put_be32(out, images.cols);
    out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    put_be32(out, kIdxLabelsMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (labels.size() != images.count)
        throw IdxFormatError(IdxErrorKind::CountMismatch, "image file holds " + std::to_string(images.count) +
                                                              " items but label file holds " +
                                                              std::to_string(labels.size()));
    const std::size_t d = std::size_t{images.rows} * images.cols;
    Dataset data;
    data.features = Matrix(images.count, d);
    auto out = data.features.data();
    for (std::size_t i = 0; i < images.pixels.size(); ++i) out[i] = images.pixels[i] / 255.0;
    data.target = LabelTargets(labels.begin(), labels.end());
    data.meta.source = "idx:" + images_path.string();
    data.meta.normalization = "pixel/255";
    return data;
}

std::string to_string(TargetFamily family) {
    switch (family) {
        case TargetFamily::AdditiveSine: return "additive_sine";
        case TargetFamily::ProductCosine: return "product_cosine";
        case TargetFamily::PolynomialTruth: return "polynomial_truth";
    }
    return "unknown";
}

TargetFamily parse_target_family(const std::string& text) {
    if (text == "additive_sine") return TargetFamily::AdditiveSine;
    if (text == "product_cosine") return TargetFamily::ProductCosine;
    if (text == "polynomial_truth") return TargetFamily::PolynomialTruth;
    throw ValidationError("unknown target family '" + text + "'");
}

void SynthSpec::validate() const {
    require(n >= 1 && d >= 1, "synthetic data needs n >= 1 and d >= 1");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be non-negative");
    require(smoothness_scale > 0.0 && std::isfinite(smoothness_scale), "smoothness_scale must be positive");
}

TruthFunction target_function(TargetFamily family, std::size_t d, double c) {
    using std::numbers::pi;
    switch (family) {
        case TargetFamily::AdditiveSine:
            return [d, c](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s += std::sin(2.0 * pi * c * v);
                return s / static_cast<double>(d);
            };
        case TargetFamily::ProductCosine:
            return [c](std::span<const double> x) {
                double p = 1.0;
                for (double v : x) p *= std::cos(pi * c * v);
                return p;
            };
        case TargetFamily::PolynomialTruth:
            return [](std::span<const double> x) { return x[0] * x[0]; };
    }
    throw ValidationError("unknown target family");
}

SyntheticData synth(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticData out;
    out.truth = target_function(spec.target_family, spec.d, spec.smoothness_scale);
    Dataset& data = out.data;
    data.features = Matrix(spec.n, spec.d);
    for (double& v : data.features.data()) v = rng.uniform();
    RealTargets y(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        y[i] = out.truth(data.features.row(i));
        if (spec.noise_sigma > 0.0) y[i] += spec.noise_sigma * rng.normal();
    }
    data.target = std::move(y);
    data.meta.source = "synth:" + to_string(spec.target_family);
    data.meta.normalization = "none";
    data.meta.seed = spec.seed;
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie strictly between 0 and 1");
    const std::size_t n = data.rows();
    const auto test_n = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    if (test_n == 0 || test_n >= n)
        throw ValidationError("split of " + std::to_string(n) + " rows at fraction " + format_double(test_fraction) +
                              " leaves an empty part");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_n));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(test_n), order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    auto tr = data.subset(train);
    auto te = data.subset(test);
    tr.meta.seed = te.meta.seed = seed;
    return {std::move(tr), std::move(te)};
}

Dataset binarize(const Dataset& data, int positive_label) {
    const auto& labels = data.labels();
    if (std::find(labels.begin(), labels.end(), positive_label) == labels.end())
        throw ValidationError("label " + std::to_string(positive_label) + " does not occur in the data");
    Dataset out;
    out.features = data.features;
    LabelTargets binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] == positive_label ? 1 : 0;
    out.target = std::move(binary);
    out.meta = data.meta;
    return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t j = 0; j < data.cols(); ++j) out << 'x' << j << ',';
    out << "y\n";
    const auto y = data.target_values();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (double v : data.features.row(i)) out << format_double(v) << ',';
        if (data.has_labels()) out << data.labels()[i];
        else out << format_double(y[i]);
        out << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

Dataset read_csv(const std::filesystem::path& path, bool integer_labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("'" + path.string() + "' is empty");
    const std::size_t width = split(line, ',').size();
    if (width < 2) throw ValidationError("CSV needs at least one feature column and a target column");
    const std::size_t d = width - 1;
    std::vector<double> values;
    RealTargets real;
    LabelTargets labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != width)
            throw ShapeError("line " + std::to_string(line_no) + " of '" + path.string() + "' has " +
                             std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
        for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(cells[j]));
        if (integer_labels) labels.push_back(static_cast<int>(parse_int(cells[d])));
        else real.push_back(parse_double(cells[d]));
    }
    Dataset data;
    const std::size_t n = values.size() / d;
    data.features = Matrix(n, d, std::move(values));
    if (integer_labels) data.target = std::move(labels);
    else data.target = std::move(real);
    data.meta.source = "csv:" + path.string();
    data.validate();
    return data;
}

}  // namespace bpr
