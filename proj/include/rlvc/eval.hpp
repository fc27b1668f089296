#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlvc/data.hpp"
#include "rlvc/diffusion.hpp"
#include "rlvc/gan.hpp"
#include "rlvc/softmax.hpp"

namespace rlvc::eval {

using nn::Matrix;

/// Worker threads from RLVC_THREADS (0 or unset = hardware concurrency).
int worker_threads();

struct SynthesizedSet {
    Matrix features;
    std::vector<int> labels;
};

/// Full T-step ancestral sampling per class: x_T ~ N(0, I), then for
/// t = T-1..0, x0_hat = G(eps, z, x_{t+1}, t+1) and x_t ~ q(x_t | x0_hat, x_{t+1}).
/// Returns the last x0_hat. Classes use independent streams derived from
/// `seed`, so the result does not depend on the thread count.
Matrix sample_class(const gan::Generator& gen, const Eigen::VectorXd& z, int count, const diffusion::Schedule& sched,
                    Rng& rng);
SynthesizedSet synthesize_unseen(const gan::Generator& gen, const data::ZslDataset& ds, int per_class,
                                 const diffusion::Schedule& sched, std::uint64_t seed);

/// Linear softmax head; row r of the weight belongs to class_ids[r] (ascending).
struct ClassifierHead {
    nn::DenseNet net;
    std::vector<int> class_ids;

    std::vector<int> predict(const Matrix& features) const;
    int row_of(int class_id) const;
};

ClassifierHead train_head(const Matrix& features, std::span<const int> labels, const softmax::FitConfig& config,
                          Rng& rng);
ClassifierHead train_czsl(const SynthesizedSet& unseen, std::span<const int> unseen_classes,
                          const softmax::FitConfig& config, Rng& rng);
ClassifierHead train_gzsl(const Matrix& seen_features, std::span<const int> seen_labels, const SynthesizedSet& unseen,
                          const softmax::FitConfig& config, Rng& rng);

/// Accuracy averaged uniformly over the classes present in `labels`.
/// Throws ConfigError if a label is outside the head's classes.
double macro_accuracy(const ClassifierHead& head, const Matrix& features, std::span<const int> labels);
double harmonic_mean(double s, double u);

struct EvalReport {
    double acc = 0.0;
    double u = 0.0;
    double s = 0.0;
    double h = 0.0;

    /// "acc=<acc> u=<u> s=<s> h=<h>"
    std::string to_line() const;
    static EvalReport parse_line(const std::string& line);
};

double evaluate_czsl(const ClassifierHead& head, const data::ZslDataset& ds);
EvalReport evaluate(const ClassifierHead& czsl, const ClassifierHead& gzsl, const data::ZslDataset& ds);

struct EvalConfig {
    int synth_per_class = 200;
    softmax::FitConfig head;
};

/// Synthesis + both heads + report.
EvalReport run_evaluation(const gan::Generator& gen, const data::ZslDataset& ds, const diffusion::Schedule& sched,
                          const EvalConfig& config, std::uint64_t seed);

}  // namespace rlvc::eval
