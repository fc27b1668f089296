#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlvc/cues.hpp"
#include "rlvc/data.hpp"
#include "rlvc/diffusion.hpp"
#include "rlvc/errors.hpp"
#include "rlvc/eval.hpp"
#include "rlvc/gan.hpp"
#include "rlvc/reward.hpp"

namespace rlvc::train {

struct TrainConfig {
    int epochs = 20;
    /// First (zero-based) epoch with RL updates.
    int rl_start_epoch = 5;
    int critic_steps = 1;
    int batch_size = 64;
    double lr_adv = 5e-4;
    double lr_rl = 5e-5;
    double lambda_pd = 5.0;
    double lambda_gp = 10.0;
    double ema_alpha = 0.9;
    int diffusion_steps = 4;
    double beta_min = 0.1;
    double beta_max = 0.4;
    std::uint64_t seed = 0;

    bool use_rl = true;
    bool use_cues = true;
    /// Advantage = raw reward (no EMA baseline).
    bool raw_reward = false;
    cues::CueLoss cue_loss = cues::CueLoss::CosinePd;

    /// Evaluate every N epochs (and after the last); 0 disables.
    int eval_interval = 0;
    eval::EvalConfig eval;

    /// Write generator.ckpt into checkpoint_dir every N epochs; 0 disables.
    int checkpoint_interval = 0;
    std::filesystem::path checkpoint_dir;

    diffusion::Schedule schedule() const { return diffusion::Schedule::linear(diffusion_steps, beta_min, beta_max); }
    void validate() const;
};

inline constexpr double kNotAValue = std::numeric_limits<double>::quiet_NaN();

struct MetricsRow {
    int epoch = 0;
    double raw_reward_mean = kNotAValue;
    double ema_baseline = kNotAValue;
    double advantage_mean = kNotAValue;
    double critic_loss = kNotAValue;
    double gen_adv_loss = kNotAValue;
    double pd_loss = kNotAValue;
    double czsl_acc = kNotAValue;
    double gzsl_u = kNotAValue;
    double gzsl_s = kNotAValue;
    double gzsl_h = kNotAValue;
};

/// Exact per-epoch update counts.
struct UpdateCounters {
    long critic = 0;
    long gen_adv = 0;
    long rl = 0;
    long ema_writes = 0;
};

class TrainingAborted : public NumericError {
public:
    TrainingAborted(const std::string& what, int epoch, int batch)
        : NumericError(what), epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    int batch() const { return batch_; }

private:
    int epoch_;
    int batch_;
};

/// Per minibatch: K critic updates on L_D, one generator update
/// on L_adv + lambda_PD L_cue, and from epoch E_RL on a separate generator
/// update on L_RL with its own optimizer and a freshly synthesized batch.
class Trainer {
public:
    /// `reward_model` must be frozen and cover the dataset's seen classes in
    /// ascending id order; `prototypes` must cover every seen class.
    Trainer(const data::ZslDataset& dataset, const rl::RewardModel& reward_model,
            const cues::VisualPrototypeTable& prototypes, TrainConfig config);

    /// Runs one epoch and returns its metrics row.
    MetricsRow run_epoch();
    void run(const std::function<void(const MetricsRow&)>& on_epoch = {});

    int epoch() const { return epoch_; }
    int minibatches_per_epoch() const;
    const std::vector<UpdateCounters>& counters() const { return counters_; }
    const std::vector<MetricsRow>& metrics() const { return metrics_; }

    const gan::Generator& generator() const { return gen_; }
    const gan::CriticX0& critic_x0() const { return cx0_; }
    const gan::CriticXt& critic_xt() const { return cxt_; }
    const rl::EmaBaseline& baseline() const { return ema_; }
    const diffusion::Schedule& schedule() const { return sched_; }
    const TrainConfig& config() const { return config_; }
    /// Seen-class index used by the reward model for a class id.
    int reward_index(int class_id) const;

private:
    struct Minibatch {
        nn::Matrix x0;
        nn::Matrix z;
        std::vector<int> labels;
    };
    struct StepStats {
        double critic = 0.0;
        double adv = 0.0;
        double cue = 0.0;
        std::optional<double> reward;
        std::optional<double> advantage;
    };

    Minibatch sample_minibatch(Rng& rng) const;
    StepStats step(const Minibatch& mb, bool rl_active, UpdateCounters& counts);

    const data::ZslDataset& ds_;
    const rl::RewardModel& reward_;
    const cues::VisualPrototypeTable& table_;
    TrainConfig config_;
    diffusion::Schedule sched_;
    std::vector<int> train_rows_;
    std::vector<int> reward_index_;

    gan::Generator gen_;
    gan::CriticX0 cx0_;
    gan::CriticXt cxt_;
    nn::AdamState adam_cx0_;
    nn::AdamState adam_cxt_;
    nn::AdamState adam_gen_adv_;
    nn::AdamState adam_gen_rl_;
    rl::EmaBaseline ema_;
    Rng rng_train_;
    Rng rng_rl_;

    int epoch_ = 0;
    std::vector<UpdateCounters> counters_;
    std::vector<MetricsRow> metrics_;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

}  // namespace rlvc::train
