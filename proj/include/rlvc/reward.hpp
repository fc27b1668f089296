#pragma once

// Outcome reward for synthesized features: a frozen linear classifier over
// the seen classes scores each feature, the log-probability of the intended
// class is the reward, and an exponential moving average of batch rewards
// serves as the baseline for the policy-gradient advantage.

#include <span>
#include <vector>

#include "rlvc/nn.hpp"
#include "rlvc/softmax.hpp"

namespace rlvc::rl {

using nn::Matrix;
using nn::Vector;

class RewardModel {
public:
    /// Wraps a single affine layer d -> C_s. Starts unfrozen.
    explicit RewardModel(nn::DenseNet linear);
    static RewardModel zeros(int feature_dim, int num_classes);

    int feature_dim() const { return net_.input_dim(); }
    int num_classes() const { return net_.output_dim(); }

    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    const nn::DenseNet& net() const { return net_; }
    /// Throws UsageError once frozen.
    nn::DenseNet& mutable_net();

    Matrix logits(const Matrix& features) const { return net_.forward(features); }

private:
    nn::DenseNet net_;
    bool frozen_ = false;
};

/// Trains a linear softmax classifier on seen-class features (labels are
/// seen-class indices) and returns it frozen.
RewardModel pretrain_reward(const Matrix& features, std::span<const int> labels, int num_classes,
                            const softmax::FitConfig& config, Rng& rng);

double accuracy(const RewardModel& model, const Matrix& features, std::span<const int> labels);

/// log softmax(W x + b)_y. Always <= 0.
double reward(const RewardModel& model, const Vector& x, int y);
Vector rewards(const RewardModel& model, const Matrix& x, std::span<const int> y);

/// B x 1 log-probabilities on the tape; the reward model enters as constants,
/// so gradients only reach `x`.
nn::Var log_prob_on_tape(nn::Tape& tape, const RewardModel& model, nn::Var x, std::span<const int> y);

class EmaBaseline {
public:
    explicit EmaBaseline(double alpha = 0.9);

    /// b <- alpha b + (1 - alpha) mean(r). The first update sets b to mean(r).
    void update(std::span<const double> batch_rewards);
    void update(const Vector& batch_rewards);

    double value() const { return b_; }
    double alpha() const { return alpha_; }
    bool initialized() const { return initialized_; }
    long writes() const { return writes_; }

    /// Explicit state, e.g. to resume from a known baseline.
    void reset(double b);

private:
    double alpha_;
    double b_ = 0.0;
    bool initialized_ = false;
    long writes_ = 0;
};

struct AdvantageBatch {
    Vector rewards;
    Vector advantages;
    /// Set only by the constructors below: advantages are plain values, not tape nodes.
    bool gradient_barrier = false;
};

/// A_i = r_i - b with b the (already updated) baseline.
AdvantageBatch advantage(const Vector& batch_rewards, const EmaBaseline& baseline);
/// Ablation: A_i = r_i with no baseline.
AdvantageBatch raw_advantage(const Vector& batch_rewards);
AdvantageBatch constant_advantage(const Vector& values);

/// -(1/B) sum_i A_i log p_i. Throws UsageError if the barrier is not set.
nn::Var rl_loss_on_tape(const AdvantageBatch& adv, nn::Var log_probs);

}  // namespace rlvc::rl
