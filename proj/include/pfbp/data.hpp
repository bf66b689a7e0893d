#pragma once

// Dense datasets with a binary target, their on-disk formats, and the
// two-axis partition into sample subsets / feature subsets / groups.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfbp/error.hpp"

namespace pfbp {

static_assert(std::endian::native == std::endian::little,
              "binary dataset format assumes a little-endian host");

// ===========================================================================
// Dataset
// ===========================================================================

struct Dataset {
    Eigen::MatrixXd values;             // n_samples x n_features, column-major
    std::vector<std::uint8_t> target;   // 0/1, length n_samples
    std::vector<std::string> feature_names;  // empty or n_features entries

    std::size_t n_samples() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_features() const { return static_cast<std::size_t>(values.cols()); }

    std::span<const double> column(std::size_t j) const {
        return {values.col(static_cast<Eigen::Index>(j)).data(), n_samples()};
    }

    std::size_t positives() const {
        return static_cast<std::size_t>(std::count(target.begin(), target.end(), std::uint8_t{1}));
    }

    /// Frequency of the positive class.
    double class_frequency() const {
        return n_samples() == 0 ? 0.0 : static_cast<double>(positives()) / static_cast<double>(n_samples());
    }

    bool has_both_classes() const {
        const auto pos = positives();
        return pos > 0 && pos < n_samples();
    }

    std::string feature_name(std::size_t j) const {
        if (j < feature_names.size()) return feature_names[j];
        return "X" + std::to_string(j);
    }

    /// Throws LoadError when an invariant is broken.
    void validate(bool require_both_classes = false) const {
        if (n_features() < 1) throw LoadError(LoadErrorKind::Shape, "dataset has no feature columns");
        if (n_samples() < 2) throw LoadError(LoadErrorKind::Shape, "dataset needs at least 2 samples");
        if (target.size() != n_samples())
            throw LoadError(LoadErrorKind::Shape, "target length does not match sample count");
        if (!feature_names.empty() && feature_names.size() != n_features())
            throw LoadError(LoadErrorKind::Shape, "feature name count does not match feature count");
        for (auto t : target)
            if (t > 1) throw LoadError(LoadErrorKind::NonBinaryTarget, "target values must be 0 or 1");
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            for (Eigen::Index i = 0; i < values.rows(); ++i)
                if (!std::isfinite(values(i, j))) {
                    const auto kind = std::isnan(values(i, j)) ? LoadErrorKind::MissingValue
                                                               : LoadErrorKind::NonFinite;
                    throw LoadError(kind, "non-finite value at row " + std::to_string(i) +
                                              ", column " + std::to_string(j));
                }
        if (require_both_classes && !has_both_classes())
            throw LoadError(LoadErrorKind::NonBinaryTarget, "target has a single class");
    }
};

/// Rows `rows` of `ds`, keeping every feature.
inline Dataset subset_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), ds.values.cols());
    out.target.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.values.row(static_cast<Eigen::Index>(r)) = ds.values.row(static_cast<Eigen::Index>(rows[r]));
        out.target[r] = ds.target[rows[r]];
    }
    out.feature_names = ds.feature_names;
    return out;
}

/// Keeps only the listed feature columns, in the given order.
inline Dataset subset_columns(const Dataset& ds, std::span<const std::size_t> cols) {
    Dataset out;
    out.values.resize(ds.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        out.values.col(static_cast<Eigen::Index>(c)) = ds.values.col(static_cast<Eigen::Index>(cols[c]));
    out.target = ds.target;
    if (!ds.feature_names.empty())
        for (auto c : cols) out.feature_names.push_back(ds.feature_names[c]);
    return out;
}

struct HoldoutSplit {
    Dataset train;
    Dataset holdout;
};

/// Random train/holdout split; `fraction` of rows go to the holdout set.
inline HoldoutSplit split_holdout(const Dataset& ds, double fraction, std::uint64_t seed) {
    detail::require(fraction > 0.0 && fraction < 1.0, "holdout fraction must be in (0,1)");
    std::vector<std::size_t> perm(ds.n_samples());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_hold = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.n_samples()))));
    detail::require(n_hold < ds.n_samples(), "holdout would leave no training rows");
    std::vector<std::size_t> hold(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::sort(hold.begin(), hold.end());
    std::sort(train.begin(), train.end());
    return {subset_rows(ds, train), subset_rows(ds, hold)};
}

// ===========================================================================
// File formats
// ===========================================================================

enum class DataFormat { Csv, Binary };

inline DataFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".bin" || ext == ".pfbp") return DataFormat::Binary;
    return DataFormat::Csv;
}

/// Which CSV column holds the target: a header name or a zero-based index.
struct TargetColumn {
    std::optional<std::string> name;
    std::optional<std::size_t> index;

    static TargetColumn by_name(std::string n) { return {std::move(n), std::nullopt}; }
    static TargetColumn by_index(std::size_t i) { return {std::nullopt, i}; }

    /// "T" -> by name; "3" -> by name if a header says "3", else by index.
    static TargetColumn parse(const std::string& spec) {
        TargetColumn t;
        t.name = spec;
        std::size_t idx = 0;
        auto [p, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
        if (ec == std::errc{} && p == spec.data() + spec.size()) t.index = idx;
        return t;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return cells;
}

inline bool is_missing_token(std::string_view cell) {
    if (cell.empty()) return true;
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan" || lower == "na" || lower == "null" || lower == "?";
}

inline double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    const auto where = " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")";
    if (is_missing_token(cell)) throw LoadError(LoadErrorKind::MissingValue, "missing value" + where);
    double v = 0.0;
    const char* first = cell.data();
    if (*first == '+') ++first;
    auto [p, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    if (ec != std::errc{} || p != cell.data() + cell.size()) {
        std::string lower(cell);
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lower.find("inf") != std::string::npos)
            throw LoadError(LoadErrorKind::NonFinite, "infinite value" + where);
        throw LoadError(LoadErrorKind::Parse, "cannot parse '" + std::string(cell) + "'" + where);
    }
    if (std::isnan(v)) throw LoadError(LoadErrorKind::MissingValue, "missing value" + where);
    if (!std::isfinite(v)) throw LoadError(LoadErrorKind::NonFinite, "infinite value" + where);
    return v;
}

inline constexpr char kMagic[4] = {'P', 'F', 'B', 'P'};
inline constexpr std::uint32_t kBinaryVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw LoadError(LoadErrorKind::BadFormat, "truncated binary header");
    return v;
}

}  // namespace detail

inline Dataset read_csv(std::istream& in, const TargetColumn& target) {
    std::string line;
    if (!std::getline(in, line)) throw LoadError(LoadErrorKind::Parse, "empty CSV input");
    const auto header = detail::split_csv_line(line);

    std::optional<std::size_t> tcol;
    if (target.name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == *target.name) tcol = i;
    }
    if (!tcol && target.index) tcol = *target.index;
    if (!tcol || *tcol >= header.size())
        throw LoadError(LoadErrorKind::Parse, "target column not found in CSV header");

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != *tcol) ds.feature_names.emplace_back(header[i]);
    const std::size_t p = header.size() - 1;

    std::vector<double> flat;  // row-major while reading
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw LoadError(LoadErrorKind::Parse, "row " + std::to_string(row) + " has " +
                                                      std::to_string(cells.size()) + " cells, expected " +
                                                      std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = detail::parse_cell(cells[c], row, c);
            if (c == *tcol) {
                if (v != 0.0 && v != 1.0)
                    throw LoadError(LoadErrorKind::NonBinaryTarget,
                                    "target value '" + std::string(cells[c]) + "' at row " + std::to_string(row));
                ds.target.push_back(static_cast<std::uint8_t>(v));
            } else {
                flat.push_back(v);
            }
        }
        ++row;
    }
    ds.values.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < row; ++r)
        for (std::size_t c = 0; c < p; ++c)
            ds.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * p + c];
    ds.validate();
    return ds;
}

inline void write_csv(std::ostream& out, const Dataset& ds, const std::string& target_name = "T") {
    for (std::size_t j = 0; j < ds.n_features(); ++j) out << ds.feature_name(j) << ',';
    out << target_name << '\n';
    char buf[64];
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        for (std::size_t j = 0; j < ds.n_features(); ++j) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf),
                                         ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out.write(buf, p - buf);
            out << ',';
        }
        out << static_cast<int>(ds.target[i]) << '\n';
    }
}

/// Binary layout (little-endian): "PFBP", u32 version, u64 n, u64 p,
/// then p*n f64 column-major, then n target bytes.
inline void write_binary(std::ostream& out, const Dataset& ds) {
    out.write(detail::kMagic, 4);
    detail::write_pod(out, detail::kBinaryVersion);
    detail::write_pod(out, static_cast<std::uint64_t>(ds.n_samples()));
    detail::write_pod(out, static_cast<std::uint64_t>(ds.n_features()));
    out.write(reinterpret_cast<const char*>(ds.values.data()),
              static_cast<std::streamsize>(sizeof(double) * ds.n_samples() * ds.n_features()));
    out.write(reinterpret_cast<const char*>(ds.target.data()), static_cast<std::streamsize>(ds.n_samples()));
}

inline Dataset read_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, detail::kMagic, 4) != 0)
        throw LoadError(LoadErrorKind::BadFormat, "bad magic, not a PFBP binary matrix");
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != detail::kBinaryVersion)
        throw LoadError(LoadErrorKind::BadFormat, "unsupported binary version " + std::to_string(version));
    const auto n = detail::read_pod<std::uint64_t>(in);
    const auto p = detail::read_pod<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 40) || p > (std::uint64_t{1} << 32))
        throw LoadError(LoadErrorKind::BadFormat, "implausible matrix shape in header");
    Dataset ds;
    ds.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    ds.target.resize(n);
    in.read(reinterpret_cast<char*>(ds.values.data()), static_cast<std::streamsize>(sizeof(double) * n * p));
    in.read(reinterpret_cast<char*>(ds.target.data()), static_cast<std::streamsize>(n));
    if (!in) throw LoadError(LoadErrorKind::BadFormat, "truncated binary payload");
    ds.validate();
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const TargetColumn& target = TargetColumn::by_name("T")) {
    std::ifstream in(path, format == DataFormat::Binary ? std::ios::binary : std::ios::in);
    if (!in) throw LoadError(LoadErrorKind::Io, "cannot open " + path.string());
    return format == DataFormat::Binary ? read_binary(in) : read_csv(in, target);
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            const TargetColumn& target = TargetColumn::by_name("T")) {
    return load_dataset(path, format_from_path(path), target);
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds, DataFormat format) {
    std::ofstream out(path, format == DataFormat::Binary ? std::ios::binary : std::ios::out);
    if (!out) throw LoadError(LoadErrorKind::Io, "cannot write " + path.string());
    if (format == DataFormat::Binary)
        write_binary(out, ds);
    else
        write_csv(out, ds);
    if (!out) throw LoadError(LoadErrorKind::Io, "write failed for " + path.string());
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    save_dataset(path, ds, format_from_path(path));
}

// ===========================================================================
// Partitioning
// ===========================================================================

enum class SampleSizeRule { Std, Epv };

inline const char* to_string(SampleSizeRule r) { return r == SampleSizeRule::Std ? "std" : "epv"; }

inline SampleSizeRule parse_rule(std::string_view s) {
    if (s == "std" || s == "STD") return SampleSizeRule::Std;
    if (s == "epv" || s == "EPV") return SampleSizeRule::Epv;
    throw ConfigError("unknown sample-size rule '" + std::string(s) + "' (expected std or epv)");
}

/// Minimum rows per sample subset so a logistic model with `df` parameters
/// (intercept included) gets valid local tests. STD: df*c/sqrt(p0*p1);
/// EPV: df*c/min(p0,p1).
inline std::size_t required_subset_size(double p1, std::size_t df, double c_rule, SampleSizeRule rule) {
    detail::require(p1 > 0.0 && p1 < 1.0, "class frequencies must lie strictly inside (0,1)");
    detail::require(df >= 1 && c_rule > 0.0, "df and c must be positive");
    const double p0 = 1.0 - p1;
    const double denom = rule == SampleSizeRule::Std ? std::sqrt(p0 * p1) : std::min(p0, p1);
    const double s = static_cast<double>(df) * c_rule / denom;
    // Guard against 200.00000000000003 turning into 201.
    return static_cast<std::size_t>(std::ceil(s * (1.0 - 1e-12)));
}

struct PartitionParams {
    std::size_t max_vars = 10;
    double c_rule = 10.0;
    SampleSizeRule rule = SampleSizeRule::Std;
    std::size_t workers = 1;
    double oversubscription = 1.0;
    std::size_t group_size = 15;
    std::uint64_t seed = 0;
    std::optional<std::size_t> df_override;  // defaults to max_vars + 1
};

struct PartitionPlan {
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    std::size_t s = 0;   // rule-derived minimum rows per sample subset
    std::size_t ns = 0;  // number of sample subsets
    std::size_t f = 0;   // features per (largest) feature subset
    std::size_t nf = 0;  // number of feature subsets
    std::size_t C = 15;  // sample subsets per group
    std::size_t Q = 0;   // number of groups
    std::vector<std::size_t> row_permutation;     // position -> sample index
    std::vector<std::size_t> feature_assignment;  // feature -> feature subset
    std::uint64_t rng_seed = 0;
    bool undersized = false;  // s exceeded n_samples, so ns was forced to 1

    // Derived: subset i occupies row_permutation[subset_offsets[i] .. subset_offsets[i+1]).
    std::vector<std::size_t> subset_offsets;
    std::vector<std::size_t> feature_offsets;

    std::span<const std::size_t> subset_rows(std::size_t i) const {
        detail::require(i < ns, "sample subset id out of range");
        return std::span<const std::size_t>(row_permutation)
            .subspan(subset_offsets[i], subset_offsets[i + 1] - subset_offsets[i]);
    }

    std::size_t subset_size(std::size_t i) const { return subset_offsets[i + 1] - subset_offsets[i]; }

    std::vector<std::size_t> feature_subset(std::size_t j) const {
        detail::require(j < nf, "feature subset id out of range");
        std::vector<std::size_t> out(feature_offsets[j + 1] - feature_offsets[j]);
        std::iota(out.begin(), out.end(), feature_offsets[j]);
        return out;
    }

    /// Sample subsets [first, last) of group q.
    std::pair<std::size_t, std::size_t> group_range(std::size_t q) const {
        detail::require(q < Q, "group id out of range");
        return {q * C, std::min((q + 1) * C, ns)};
    }

    /// Recomputes the offsets from (n, ns, p, nf).
    void finalize() {
        subset_offsets.assign(ns + 1, 0);
        const std::size_t base = n_samples / ns, extra = n_samples % ns;
        for (std::size_t i = 0; i < ns; ++i) subset_offsets[i + 1] = subset_offsets[i] + base + (i < extra ? 1 : 0);
        feature_offsets.assign(nf + 1, 0);
        const std::size_t fbase = n_features / nf, fextra = n_features % nf;
        for (std::size_t j = 0; j < nf; ++j)
            feature_offsets[j + 1] = feature_offsets[j] + fbase + (j < fextra ? 1 : 0);
        feature_assignment.assign(n_features, 0);
        for (std::size_t j = 0; j < nf; ++j)
            for (auto k = feature_offsets[j]; k < feature_offsets[j + 1]; ++k) feature_assignment[k] = j;
        f = fbase + (fextra ? 1 : 0);
        Q = (ns + C - 1) / C;
    }
};

/// Plan with an explicit number of sample subsets; rows shuffled by `seed`.
inline PartitionPlan make_partition_plan_explicit(std::size_t n_samples, std::size_t n_features, std::size_t ns,
                                                  std::size_t nf, std::size_t group_size, std::uint64_t seed) {
    detail::require(n_samples >= 1 && n_features >= 1, "empty dataset");
    detail::require(ns >= 1 && ns <= n_samples, "ns must be in [1, n_samples]");
    detail::require(group_size >= 1, "group size must be positive");
    PartitionPlan plan;
    plan.n_samples = n_samples;
    plan.n_features = n_features;
    plan.ns = ns;
    plan.s = n_samples / ns;
    plan.nf = std::clamp<std::size_t>(nf, 1, n_features);
    plan.C = group_size;
    plan.rng_seed = seed;
    plan.row_permutation.resize(n_samples);
    std::iota(plan.row_permutation.begin(), plan.row_permutation.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(plan.row_permutation.begin(), plan.row_permutation.end(), rng);
    plan.finalize();
    return plan;
}

inline PartitionPlan make_partition_plan(const Dataset& ds, const PartitionParams& params) {
    detail::require(params.max_vars >= 1, "max_vars must be at least 1");
    detail::require(params.workers >= 1, "workers must be at least 1");
    detail::require(params.oversubscription > 0.0, "oversubscription must be positive");
    if (!ds.has_both_classes()) throw PreconditionError("partitioning requires both target classes");
    const std::size_t df = params.df_override.value_or(params.max_vars + 1);
    const std::size_t s = required_subset_size(ds.class_frequency(), df, params.c_rule, params.rule);
    const std::size_t n = ds.n_samples();
    const std::size_t ns = std::max<std::size_t>(1, n / s);
    const auto nf = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(params.oversubscription * static_cast<double>(params.workers) /
                                               static_cast<double>(params.group_size))));
    auto plan = make_partition_plan_explicit(n, ds.n_features(), ns, nf, params.group_size, params.seed);
    plan.s = s;
    plan.undersized = s > n;
    return plan;
}

/// One (sample subset, feature subset) cell, materialized.
struct DataBlock {
    std::size_t sample_subset_id = 0;
    std::size_t feature_subset_id = 0;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    Eigen::MatrixXd values;
    std::vector<std::uint8_t> target_slice;
};

inline DataBlock block(const Dataset& ds, const PartitionPlan& plan, std::size_t i, std::size_t j) {
    if (i >= plan.ns || j >= plan.nf) throw PreconditionError("block id out of range");
    detail::require(plan.n_samples == ds.n_samples() && plan.n_features == ds.n_features(),
                    "plan was built for a different dataset shape");
    DataBlock b;
    b.sample_subset_id = i;
    b.feature_subset_id = j;
    const auto rows = plan.subset_rows(i);
    b.rows.assign(rows.begin(), rows.end());
    b.cols = plan.feature_subset(j);
    b.values.resize(static_cast<Eigen::Index>(b.rows.size()), static_cast<Eigen::Index>(b.cols.size()));
    for (std::size_t c = 0; c < b.cols.size(); ++c)
        for (std::size_t r = 0; r < b.rows.size(); ++r)
            b.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                ds.values(static_cast<Eigen::Index>(b.rows[r]), static_cast<Eigen::Index>(b.cols[c]));
    b.target_slice.reserve(b.rows.size());
    for (auto r : b.rows) b.target_slice.push_back(ds.target[r]);
    return b;
}

inline void to_json(nlohmann::json& j, const PartitionPlan& p) {
    j = nlohmann::json{{"n_samples", p.n_samples},
                       {"n_features", p.n_features},
                       {"s", p.s},
                       {"ns", p.ns},
                       {"f", p.f},
                       {"nf", p.nf},
                       {"C", p.C},
                       {"Q", p.Q},
                       {"rng_seed", p.rng_seed},
                       {"undersized", p.undersized},
                       {"row_permutation", p.row_permutation},
                       {"feature_assignment", p.feature_assignment}};
}

inline void from_json(const nlohmann::json& j, PartitionPlan& p) {
    j.at("n_samples").get_to(p.n_samples);
    j.at("n_features").get_to(p.n_features);
    j.at("s").get_to(p.s);
    j.at("ns").get_to(p.ns);
    j.at("nf").get_to(p.nf);
    j.at("C").get_to(p.C);
    j.at("rng_seed").get_to(p.rng_seed);
    j.at("undersized").get_to(p.undersized);
    j.at("row_permutation").get_to(p.row_permutation);
    p.finalize();
    std::vector<std::size_t> assignment;
    j.at("feature_assignment").get_to(assignment);
    if (assignment != p.feature_assignment || j.at("Q").get<std::size_t>() != p.Q ||
        j.at("f").get<std::size_t>() != p.f)
        throw ConfigError("partition plan JSON is internally inconsistent");
}

}  // namespace pfbp
