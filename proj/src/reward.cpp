#include "rlvc/reward.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::rl {

RewardModel::RewardModel(nn::DenseNet linear) : net_(std::move(linear)) {
    if (net_.num_layers() != 1) throw ConfigError("reward model must be a single affine layer");
}

RewardModel RewardModel::zeros(int feature_dim, int num_classes) {
    return RewardModel(nn::DenseNet({feature_dim, num_classes}));
}

nn::DenseNet& RewardModel::mutable_net() {
    if (frozen_) throw UsageError("reward model is frozen; its parameters are immutable");
    return net_;
}

RewardModel pretrain_reward(const Matrix& features, std::span<const int> labels, int num_classes,
                            const softmax::FitConfig& config, Rng& rng) {
    RewardModel model(softmax::fit(features, labels, num_classes, config, rng));
    model.freeze();
    return model;
}

double accuracy(const RewardModel& model, const Matrix& features, std::span<const int> labels) {
    if (labels.empty()) return 0.0;
    const auto pred = softmax::predict(model.net(), features);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

Vector rewards(const RewardModel& model, const Matrix& x, std::span<const int> y) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw ConfigError("rewards: label count mismatch");
    for (int c : y)
        if (c < 0 || c >= model.num_classes())
            throw UsageError("reward: class " + std::to_string(c) + " outside the reward model's " +
                             std::to_string(model.num_classes()) + " classes");
    const Matrix logits = model.logits(x);
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        out(i) = logits(i, y[static_cast<std::size_t>(i)]) - lse;
    }
    return out;
}

double reward(const RewardModel& model, const Vector& x, int y) {
    const int labels[1] = {y};
    return rewards(model, x.transpose(), labels)(0);
}

nn::Var log_prob_on_tape(nn::Tape& tape, const RewardModel& model, nn::Var x, std::span<const int> y) {
    for (int c : y)
        if (c < 0 || c >= model.num_classes()) throw UsageError("reward: class " + std::to_string(c) + " out of range");
    nn::BoundNet r = nn::bind(tape, model.net(), false);
    return nn::pick(nn::log_softmax_rows(nn::forward(r, x).output), y);
}

EmaBaseline::EmaBaseline(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("EMA smoothing must lie in [0, 1)");
}

void EmaBaseline::update(std::span<const double> batch_rewards) {
    if (batch_rewards.empty()) throw UsageError("ema_update: empty reward batch");
    const double m = std::accumulate(batch_rewards.begin(), batch_rewards.end(), 0.0) /
                     static_cast<double>(batch_rewards.size());
    const double next = initialized_ ? alpha_ * b_ + (1.0 - alpha_) * m : m;
    if (!std::isfinite(next)) throw NumericError("EMA baseline became non-finite");
    b_ = next;
    initialized_ = true;
    ++writes_;
}

void EmaBaseline::update(const Vector& batch_rewards) {
    update(std::span<const double>(batch_rewards.data(), static_cast<std::size_t>(batch_rewards.size())));
}

void EmaBaseline::reset(double b) {
    if (!std::isfinite(b)) throw NumericError("EMA baseline must be finite");
    b_ = b;
    initialized_ = true;
}

AdvantageBatch advantage(const Vector& batch_rewards, const EmaBaseline& baseline) {
    if (!baseline.initialized()) throw UsageError("advantage: baseline has not been updated with this batch");
    return {batch_rewards, (batch_rewards.array() - baseline.value()).matrix(), true};
}

AdvantageBatch raw_advantage(const Vector& batch_rewards) { return {batch_rewards, batch_rewards, true}; }

AdvantageBatch constant_advantage(const Vector& values) { return {values, values, true}; }

nn::Var rl_loss_on_tape(const AdvantageBatch& adv, nn::Var log_probs) {
    if (!adv.gradient_barrier) throw UsageError("rl_loss: advantages must carry the stop-gradient barrier");
    if (log_probs.cols() != 1 || log_probs.rows() != adv.advantages.size())
        throw ConfigError("rl_loss: expected one log-probability per advantage");
    return nn::scale(nn::mean(nn::scale_rows(log_probs, adv.advantages)), -1.0);
}

}  // namespace rlvc::rl
