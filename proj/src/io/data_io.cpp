#include "tiam/data_io.hpp"

#include "tiam/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace tiam {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

std::string fmt17(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<double> values;  // row-major N x d
    std::vector<std::size_t> labels;
    std::size_t d = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() < 2)
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": need at least one feature and a label");
        if (labels.empty()) d = fields.size() - 1;
        if (fields.size() - 1 != d)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(d + 1) + " fields, got " +
                             std::to_string(fields.size()));
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            if (!parse_double(fields[j], v))
                throw InputError(path.string() + ":" + std::to_string(lineno) +
                                 ": cannot parse feature '" + std::string(trim(fields[j])) + "'");
            if (!std::isfinite(v))
                throw InputError(path.string() + ":" + std::to_string(lineno) +
                                 ": non-finite feature '" + std::string(trim(fields[j])) + "'");
            values.push_back(v);
        }
        const std::string_view lab = trim(fields.back());
        long long label = -1;
        const auto [p, ec] = std::from_chars(lab.data(), lab.data() + lab.size(), label);
        if (ec != std::errc() || p != lab.data() + lab.size() || lab.empty())
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": cannot parse label '" + std::string(lab) + "'");
        if (label < 0)
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": label out of range (" + std::to_string(label) + ")");
        labels.push_back(static_cast<std::size_t>(label));
    }
    if (labels.empty()) throw InputError(path.string() + ": empty file");

    const std::size_t n = labels.size();
    Dataset ds;
    ds.x = DenseMatrix(d, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) ds.x(j, i) = values[i * d + j];
    ds.classes = *std::max_element(labels.begin(), labels.end()) + 1;
    ds.labels = std::move(labels);
    ds.name = path.stem().string();
    return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    for (std::size_t i = 0; i < ds.num_samples(); ++i) {
        for (std::size_t j = 0; j < ds.num_features(); ++j) out << fmt17(ds.x(j, i)) << ',';
        out << ds.labels[i] << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset synth_blobs(std::size_t d, std::size_t classes, std::size_t per_class, double separation,
                    std::uint64_t seed) {
    if (d == 0 || classes == 0 || per_class == 0)
        throw InputError("synth_blobs: counts must be >= 1");
    if (!(separation > 0.0)) throw InputError("synth_blobs: separation must be > 0");
    if (classes > d + 1)
        throw InputError("synth_blobs: " + std::to_string(classes) +
                         " equidistant means do not fit in " + std::to_string(d) + " dimensions");

    // Vertices s e_i (i < d) are pairwise s sqrt(2) apart; the (d+1)-th
    // vertex t (1,...,1) with d t^2 - 2 s t - s^2 = 0 completes the simplex.
    const double s = separation * std::sqrt(static_cast<double>(d)) / std::sqrt(2.0);
    const double dd = static_cast<double>(d);
    DenseMatrix means(d, classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (c < d) {
            means(c, c) = s;
        } else {
            const double t = s * (1.0 - std::sqrt(1.0 + dd)) / dd;
            for (std::size_t j = 0; j < d; ++j) means(j, c) = t;
        }
    }
    if (classes == 1)
        for (std::size_t j = 0; j < d; ++j) means(j, 0) = 0.0;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset ds;
    ds.x = DenseMatrix(d, classes * per_class);
    ds.classes = classes;
    ds.name = "blobs";
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::size_t col = c * per_class + k;
            for (std::size_t j = 0; j < d; ++j) ds.x(j, col) = means(j, c) + noise(rng);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InputError("split: fraction must lie in (0,1)");
    const std::size_t n = ds.num_samples();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw InputError("split: fraction " + std::to_string(train_fraction) + " of " +
                         std::to_string(n) + " samples leaves one side empty");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the permutation does not depend
    // on the standard library's shuffle.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }

    auto take = [&](std::size_t from, std::size_t to, const char* suffix) {
        Dataset part;
        part.classes = ds.classes;
        part.name = ds.name + suffix;
        part.x = DenseMatrix(ds.num_features(), to - from);
        for (std::size_t c = from; c < to; ++c) {
            for (std::size_t j = 0; j < ds.num_features(); ++j)
                part.x(j, c - from) = ds.x(j, perm[c]);
            part.labels.push_back(ds.labels[perm[c]]);
        }
        return part;
    };
    SplitResult r{take(0, n_train, "-train"), take(n_train, n, "-test"), {}};
    for (const Dataset* side : {&r.train, &r.test}) {
        std::set<std::size_t> present(side->labels.begin(), side->labels.end());
        for (std::size_t c = 0; c < ds.classes; ++c)
            if (!present.count(c))
                r.warnings.push_back("class " + std::to_string(c) + " absent from " + side->name);
    }
    return r;
}

void write_metrics_csv(const std::vector<EpochMetrics>& epochs, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << kMetricsHeader << '\n';
    for (const auto& m : epochs) {
        out << m.epoch << ',' << fmt17(m.F) << ',' << fmt17(m.loss) << ','
            << fmt17(m.train_accuracy) << ',' << fmt17(m.test_accuracy) << ',' << fmt17(m.rho)
            << ',' << fmt17(m.eps) << ',' << fmt17(m.p1) << ',' << fmt17(m.p2) << ','
            << fmt17(m.p3) << ',' << m.reverts << ',' << fmt17(m.wall_ms) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsHeader)
        throw InputError(path.string() + ": missing metrics header");
    std::vector<EpochMetrics> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        double v[12];
        if (f.size() != 12)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 12 fields");
        for (std::size_t i = 0; i < 12; ++i)
            if (!parse_double(f[i], v[i]))
                throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad number");
        EpochMetrics m;
        m.epoch = static_cast<int>(v[0]);
        m.F = v[1];
        m.loss = v[2];
        m.train_accuracy = v[3];
        m.test_accuracy = v[4];
        m.rho = v[5];
        m.eps = v[6];
        m.p1 = v[7];
        m.p2 = v[8];
        m.p3 = v[9];
        m.reverts = static_cast<int>(v[10]);
        m.wall_ms = v[11];
        out.push_back(m);
    }
    return out;
}

void write_audit_csv(const std::vector<MajorizationRecord>& records,
                     const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << kAuditHeader << '\n';
    for (const auto& r : records) {
        out << r.epoch << ',' << to_string(r.block) << ',' << r.layer + 1 << ','
            << fmt17(r.constant) << ',' << fmt17(r.base) << ',' << fmt17(r.linear) << ','
            << fmt17(r.dist_sq) << ',' << fmt17(r.target) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<MajorizationRecord> read_audit_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kAuditHeader)
        throw InputError(path.string() + ": missing audit header");
    std::vector<MajorizationRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 8)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
        MajorizationRecord r;
        const std::string_view block = trim(f[1]);
        if (block == "W") r.block = BlockKind::W;
        else if (block == "b") r.block = BlockKind::b;
        else if (block == "z") r.block = BlockKind::z;
        else if (block == "a") r.block = BlockKind::a;
        else throw InputError(path.string() + ":" + std::to_string(lineno) + ": unknown block");
        double v[8];
        for (std::size_t i : {0, 2, 3, 4, 5, 6, 7})
            if (!parse_double(f[i], v[i]))
                throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad number");
        r.epoch = static_cast<int>(v[0]);
        r.layer = static_cast<std::size_t>(v[2]) - 1;
        r.constant = v[3];
        r.base = v[4];
        r.linear = v[5];
        r.dist_sq = v[6];
        r.target = v[7];
        out.push_back(r);
    }
    return out;
}

}  // namespace tiam
