#include "rlvc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rlvc/errors.hpp"
#include "rlvc/rng.hpp"

namespace rlvc::data {

namespace fs = std::filesystem;

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::TestSeen: return "test_seen";
        case Split::TestUnseen: return "test_unseen";
    }
    return "train";
}

const char* to_string(Role r) { return r == Role::Seen ? "seen" : "unseen"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test_seen") return Split::TestSeen;
    if (s == "test_unseen") return Split::TestUnseen;
    throw ConfigError("unknown split tag '" + s + "'");
}

Role parse_role(const std::string& s) {
    if (s == "seen") return Role::Seen;
    if (s == "unseen") return Role::Unseen;
    throw ConfigError("unknown class role '" + s + "'");
}

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<int> ZslDataset::seen_classes() const {
    std::vector<int> out;
    for (int c = 0; c < num_classes(); ++c)
        if (roles[static_cast<std::size_t>(c)] == Role::Seen) out.push_back(c);
    return out;
}

std::vector<int> ZslDataset::unseen_classes() const {
    std::vector<int> out;
    for (int c = 0; c < num_classes(); ++c)
        if (roles[static_cast<std::size_t>(c)] == Role::Unseen) out.push_back(c);
    return out;
}

std::vector<int> ZslDataset::rows(Split split) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == split) out.push_back(static_cast<int>(i));
    return out;
}

Matrix ZslDataset::features_of(std::span<const int> r) const {
    Matrix out(static_cast<Eigen::Index>(r.size()), features.cols());
    for (std::size_t i = 0; i < r.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features.row(r[i]);
    return out;
}

std::vector<int> ZslDataset::labels_of(std::span<const int> r) const {
    std::vector<int> out;
    out.reserve(r.size());
    for (int i : r) out.push_back(labels[static_cast<std::size_t>(i)]);
    return out;
}

void ZslDataset::validate() const {
    const auto n = static_cast<std::size_t>(features.rows());
    if (labels.size() != n || splits.size() != n)
        throw ConfigError("row-count mismatch: " + std::to_string(n) + " feature rows, " +
                          std::to_string(labels.size()) + " label rows");
    if (static_cast<Eigen::Index>(roles.size()) != prototypes.rows())
        throw ConfigError("prototype count " + std::to_string(prototypes.rows()) + " differs from class count " +
                          std::to_string(roles.size()));
    if (!features.allFinite()) throw ConfigError("non-finite feature value");
    if (!prototypes.allFinite()) throw ConfigError("non-finite prototype value");
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes())
            throw ConfigError("row " + std::to_string(i) + ": label " + std::to_string(y) +
                              " has no prototype row");
        const Role role = roles[static_cast<std::size_t>(y)];
        if (splits[i] == Split::Train && role != Role::Seen)
            throw ConfigError("row " + std::to_string(i) + ": train sample labeled with unseen class " +
                              std::to_string(y));
        if (splits[i] == Split::TestSeen && role != Role::Seen)
            throw ConfigError("row " + std::to_string(i) + ": test_seen sample labeled with unseen class " +
                              std::to_string(y));
        if (splits[i] == Split::TestUnseen && role != Role::Unseen)
            throw ConfigError("row " + std::to_string(i) + ": test_unseen sample labeled with seen class " +
                              std::to_string(y));
    }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const fs::path& file, std::size_t line) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError(file.filename().string() + " line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const fs::path& file, std::size_t line) {
    int v = 0;
    const char* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError(file.filename().string() + " line " + std::to_string(line) + ": bad integer '" + s + "'");
    return v;
}

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw IoError("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

Matrix read_matrix(const fs::path& file) {
    const auto lines = read_lines(file);
    if (lines.empty()) return Matrix(0, 0);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        std::vector<double> row;
        for (const auto& f : fields) row.push_back(parse_real(f, file, i + 1));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(file.filename().string() + " line " + std::to_string(i + 1) + ": expected " +
                              std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void write_matrix(const Matrix& m, const fs::path& file) {
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + file.string() + " for writing");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) f << ',';
            f << format_real(m(i, j));
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + file.string());
}

void write_labels(std::span<const int> labels, std::span<const Split> splits, const fs::path& file) {
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + file.string() + " for writing");
    for (std::size_t i = 0; i < labels.size(); ++i) f << labels[i] << ',' << to_string(splits[i]) << '\n';
    if (!f) throw IoError("write failed: " + file.string());
}

void read_labels(const fs::path& file, std::vector<int>& labels, std::vector<Split>& splits) {
    const auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 2)
            throw ConfigError(file.filename().string() + " line " + std::to_string(i + 1) +
                              ": expected 'class_id,split'");
        labels.push_back(parse_int(fields[0], file, i + 1));
        try {
            splits.push_back(parse_split(fields[1]));
        } catch (const ConfigError& e) {
            throw ConfigError(file.filename().string() + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
}

void require_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
}

}  // namespace

ZslDataset load_dataset(const fs::path& dir) {
    require_dir(dir);
    ZslDataset ds;
    ds.features = read_matrix(dir / "features.csv");
    read_labels(dir / "labels.csv", ds.labels, ds.splits);
    ds.prototypes = read_matrix(dir / "prototypes.csv");

    const fs::path classes = dir / "classes.csv";
    const auto lines = read_lines(classes);
    std::vector<int> seen_ids;
    ds.roles.assign(lines.size(), Role::Seen);
    std::vector<bool> assigned(lines.size(), false);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 2)
            throw ConfigError("classes.csv line " + std::to_string(i + 1) + ": expected 'class_id,role'");
        const int id = parse_int(fields[0], classes, i + 1);
        if (id < 0 || static_cast<std::size_t>(id) >= lines.size() || assigned[static_cast<std::size_t>(id)])
            throw ConfigError("classes.csv line " + std::to_string(i + 1) + ": class ids must be 0.." +
                              std::to_string(lines.size() - 1) + " each listed once, got " + std::to_string(id));
        assigned[static_cast<std::size_t>(id)] = true;
        try {
            ds.roles[static_cast<std::size_t>(id)] = parse_role(fields[1]);
        } catch (const ConfigError& e) {
            throw ConfigError("classes.csv line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (ds.features.rows() == 0 && !ds.labels.empty())
        throw ConfigError("row-count mismatch: 0 feature rows, " + std::to_string(ds.labels.size()) + " label rows");
    ds.validate();
    return ds;
}

void save_dataset(const ZslDataset& ds, const fs::path& dir) {
    ds.validate();
    fs::create_directories(dir);
    write_matrix(ds.features, dir / "features.csv");
    write_labels(ds.labels, ds.splits, dir / "labels.csv");
    write_matrix(ds.prototypes, dir / "prototypes.csv");
    std::ofstream f(dir / "classes.csv", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write classes.csv in " + dir.string());
    for (int c = 0; c < ds.num_classes(); ++c) f << c << ',' << to_string(ds.roles[static_cast<std::size_t>(c)]) << '\n';
}

void standardize(ZslDataset& ds) {
    const auto train = ds.rows(Split::Train);
    if (train.empty()) throw ConfigError("standardize: no train rows");
    const Matrix x = ds.features_of(train);
    const Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::RowVectorXd sd = ((x.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(x.rows()))
                                .sqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (sd(j) == 0.0) sd(j) = 1.0;
    ds.features = ((ds.features.rowwise() - mu).array().rowwise() / sd.array()).matrix();
}

SyntheticDataset make_synthetic_with_means(const SyntheticSpec& spec) {
    if (spec.n_seen < 1 || spec.n_unseen < 1) throw ConfigError("synthetic data needs at least one seen and one unseen class");
    if (spec.d < 1 || spec.d_z < 1 || spec.samples_per_class < 1 || spec.semantic_cluster_size < 1)
        throw ConfigError("synthetic data: dimensions and counts must be positive");
    if (!(spec.visual_separation > 0.0) || !(spec.visual_sigma > 0.0) || spec.semantic_jitter < 0.0)
        throw ConfigError("synthetic data: separation and sigma must be positive, jitter nonnegative");
    if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0))
        throw ConfigError("synthetic data: test_fraction must lie in [0, 1)");

    const int num_classes = spec.n_seen + spec.n_unseen;
    const int cs = spec.semantic_cluster_size;
    const int num_clusters = (num_classes + cs - 1) / cs;
    Rng rng = make_stream(spec.seed, "data");

    // Unseen classes are taken from the back of each cluster in turn, so
    // every unseen class has seen siblings with near-identical prototypes.
    std::vector<Role> roles(static_cast<std::size_t>(num_classes), Role::Seen);
    int assigned = 0;
    for (int pos = cs - 1; pos >= 0 && assigned < spec.n_unseen; --pos)
        for (int k = 0; k < num_clusters && assigned < spec.n_unseen; ++k) {
            const int c = k * cs + pos;
            if (c < num_classes) {
                roles[static_cast<std::size_t>(c)] = Role::Unseen;
                ++assigned;
            }
        }

    // Prototypes are [cluster center | jitter] with the center in the first
    // m coordinates and the jitter in the rest. Visual means are a fixed
    // linear image of the prototype: the center part moves a class by about
    // cluster_spread * visual_separation, the jitter part (rescaled by
    // 1/semantic_jitter) by about class_spread * visual_separation.
    const int m = spec.d_z > 1 ? std::min(num_clusters, spec.d_z / 2) : 1;
    const int jitter_dims = spec.d_z > 1 ? spec.d_z - m : 1;
    const int jitter_at = spec.d_z > 1 ? m : 0;
    const double map_scale = spec.visual_separation / std::sqrt(2.0 * spec.d);
    const Matrix centers = standard_normal(num_clusters, m, rng) / std::sqrt(static_cast<double>(m));
    const Matrix center_map = standard_normal(spec.d, m, rng) * (spec.cluster_spread * map_scale);
    const Matrix jitter_map = standard_normal(spec.d, jitter_dims, rng) * (spec.class_spread * map_scale);

    Matrix prototypes(num_classes, spec.d_z);
    Matrix means(num_classes, spec.d);
    constexpr int kMaxTries = 2000;
    for (int c = 0; c < num_classes; ++c) {
        const int k = c / cs;
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
            Eigen::VectorXd dir = standard_normal(jitter_dims, 1, rng).col(0);
            dir.normalize();
            const Eigen::VectorXd mu = center_map * centers.row(k).transpose() + jitter_map * dir;
            placed = true;
            for (int o = 0; o < c && placed; ++o)
                placed = (means.row(o).transpose() - mu).norm() >= spec.visual_separation;
            if (placed) {
                means.row(c) = mu.transpose();
                prototypes.row(c).setZero();
                prototypes.row(c).head(m) = centers.row(k);
                prototypes.row(c).segment(jitter_at, jitter_dims) += spec.semantic_jitter * dir.transpose();
            }
        }
        if (!placed)
            throw ConfigError("could not place class " + std::to_string(c) + " visual mean at separation " +
                              format_real(spec.visual_separation) + " after " + std::to_string(kMaxTries) +
                              " tries; use a larger d or a smaller visual_separation");
    }

    ZslDataset ds;
    ds.roles = roles;
    ds.prototypes = prototypes;
    const int n_test = static_cast<int>(std::lround(spec.test_fraction * spec.samples_per_class));
    const int total = num_classes * spec.samples_per_class;
    ds.features.resize(total, spec.d);
    ds.labels.reserve(static_cast<std::size_t>(total));
    ds.splits.reserve(static_cast<std::size_t>(total));
    int row = 0;
    for (int c = 0; c < num_classes; ++c) {
        const bool seen = roles[static_cast<std::size_t>(c)] == Role::Seen;
        for (int s = 0; s < spec.samples_per_class; ++s, ++row) {
            ds.features.row(row) = means.row(c) + spec.visual_sigma * standard_normal(1, spec.d, rng);
            ds.labels.push_back(c);
            if (!seen)
                ds.splits.push_back(Split::TestUnseen);
            else
                ds.splits.push_back(s < spec.samples_per_class - n_test ? Split::Train : Split::TestSeen);
        }
    }
    ds.validate();
    return {std::move(ds), std::move(means)};
}

ZslDataset make_synthetic(const SyntheticSpec& spec) { return make_synthetic_with_means(spec).dataset; }

void export_features(const Matrix& features, std::span<const int> labels, const fs::path& dir, Split tag) {
    if (static_cast<Eigen::Index>(labels.size()) != features.rows())
        throw ConfigError("export_features: label count does not match feature rows");
    fs::create_directories(dir);
    write_matrix(features, dir / "features.csv");
    std::vector<Split> splits(labels.size(), tag);
    write_labels(labels, splits, dir / "labels.csv");
}

FeatureSet read_features(const fs::path& dir) {
    require_dir(dir);
    FeatureSet out;
    out.features = read_matrix(dir / "features.csv");
    read_labels(dir / "labels.csv", out.labels, out.splits);
    if (static_cast<Eigen::Index>(out.labels.size()) != out.features.rows())
        throw ConfigError("row-count mismatch between features.csv and labels.csv in " + dir.string());
    return out;
}

}  // namespace rlvc::data
