#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rlvc::data {

using Matrix = Eigen::MatrixXd;

enum class Split { Train, TestSeen, TestUnseen };
enum class Role { Seen, Unseen };

const char* to_string(Split s);
const char* to_string(Role r);
Split parse_split(const std::string& s);
Role parse_role(const std::string& s);

/// Pre-extracted features with class roles and semantic prototypes.
/// Class ids are 0..C-1; prototype row c belongs to class c.
struct ZslDataset {
    Matrix features;            // N x d
    std::vector<int> labels;    // N
    std::vector<Split> splits;  // N
    std::vector<Role> roles;    // C
    Matrix prototypes;          // C x d_z

    int num_samples() const { return static_cast<int>(features.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
    int semantic_dim() const { return static_cast<int>(prototypes.cols()); }
    int num_classes() const { return static_cast<int>(roles.size()); }

    std::vector<int> seen_classes() const;
    std::vector<int> unseen_classes() const;
    std::vector<int> rows(Split split) const;
    Matrix features_of(std::span<const int> rows) const;
    std::vector<int> labels_of(std::span<const int> rows) const;

    /// Throws ConfigError naming the first offending row or class.
    void validate() const;
};

/// Reads features.csv, labels.csv, prototypes.csv and classes.csv.
ZslDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const ZslDataset& ds, const std::filesystem::path& dir);

/// Standardizes every feature column with mean/std computed on train rows.
void standardize(ZslDataset& ds);

/// Classes come in semantic clusters whose prototypes differ only by a small
/// jitter, while their visual means stay at least `visual_separation` apart.
struct SyntheticSpec {
    int n_seen = 20;
    int n_unseen = 5;
    int d = 32;
    int d_z = 16;
    int samples_per_class = 60;
    int semantic_cluster_size = 5;
    double semantic_jitter = 0.05;
    double visual_separation = 6.0;
    double visual_sigma = 1.0;
    /// Typical distance between the visual offsets of two clusters, in units
    /// of visual_separation.
    double cluster_spread = 1.0;
    /// Typical distance between sibling means, in units of visual_separation.
    double class_spread = 1.5;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct SyntheticDataset {
    ZslDataset dataset;
    Matrix class_means;  // C x d
};

SyntheticDataset make_synthetic_with_means(const SyntheticSpec& spec);
ZslDataset make_synthetic(const SyntheticSpec& spec);

struct FeatureSet {
    Matrix features;
    std::vector<int> labels;
    std::vector<Split> splits;
};

/// Writes features.csv and labels.csv (split tag `tag` on every row) into `dir`.
void export_features(const Matrix& features, std::span<const int> labels, const std::filesystem::path& dir,
                     Split tag = Split::Train);
FeatureSet read_features(const std::filesystem::path& dir);

/// Shortest decimal that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace rlvc::data
