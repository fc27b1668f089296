#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rlvc/data.hpp"
#include "rlvc/eval.hpp"
#include "rlvc/softmax.hpp"
#include "rlvc/trainer.hpp"

namespace rlvc {

/// Every tunable of the pipeline. Resolution order: built-in defaults,
/// then the preset, then the config file, then command-line flags.
struct RunConfig {
    std::string preset = "synthetic";
    std::string dataset;
    std::string out = "rlvc-out";
    std::string reward;     // default: <out>/reward.ckpt
    std::string generator;  // default: <out>/generator.ckpt
    std::uint64_t seed = 0;
    bool overwrite = false;
    bool standardize = false;

    // trainer
    int epochs = 500;
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
    bool no_rl = false;
    bool no_cues = false;
    bool raw_reward = false;
    std::string cue_loss = "pd";
    int eval_interval = 0;
    int checkpoint_interval = 10;

    // synthetic benchmark
    int n_seen = 20;
    int n_unseen = 5;
    int d = 32;
    int d_z = 16;
    int samples_per_class = 60;
    int semantic_cluster_size = 5;
    double semantic_jitter = 0.05;
    double visual_separation = 6.0;
    double visual_sigma = 1.0;
    double cluster_spread = 1.0;
    double class_spread = 1.5;
    double test_fraction = 0.2;

    // reward model pre-training
    int reward_epochs = 50;
    double reward_lr = 1e-3;
    int reward_batch_size = 128;

    // evaluation heads
    int synth_per_class = 200;
    int head_epochs = 50;
    double head_lr = 1e-3;
    int head_batch_size = 128;

    std::filesystem::path reward_path() const;
    std::filesystem::path generator_path() const;

    train::TrainConfig train_config() const;
    data::SyntheticSpec synthetic_spec() const;
    softmax::FitConfig reward_fit() const;
    eval::EvalConfig eval_config() const;
};

struct ConfigKey {
    std::string name;
    std::string doc;
    std::variant<int*, double*, bool*, std::string*, std::uint64_t*> target;

    std::string get() const;
    /// Throws ConfigError on an unparseable value.
    void set(const std::string& value) const;
    bool is_flag() const { return std::holds_alternative<bool*>(target); }
};

/// Keys bound to `cfg`, in documentation order.
std::vector<ConfigKey> config_keys(RunConfig& cfg);

const std::vector<std::string>& preset_names();
/// Throws ConfigError for an unknown preset.
void apply_preset(RunConfig& cfg, const std::string& name);

/// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
void apply_values(RunConfig& cfg, const std::map<std::string, std::string>& values);

/// Defaults < preset < file < overrides. The preset is taken from the
/// overrides, else from the file, else "synthetic".
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& overrides);

std::string dump_config(const RunConfig& cfg);

}  // namespace rlvc
