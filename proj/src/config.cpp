#include "rlvc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rlvc/errors.hpp"

namespace rlvc {

std::filesystem::path RunConfig::reward_path() const {
    return reward.empty() ? std::filesystem::path(out) / "reward.ckpt" : std::filesystem::path(reward);
}

std::filesystem::path RunConfig::generator_path() const {
    return generator.empty() ? std::filesystem::path(out) / "generator.ckpt" : std::filesystem::path(generator);
}

train::TrainConfig RunConfig::train_config() const {
    train::TrainConfig t;
    t.epochs = epochs;
    t.rl_start_epoch = rl_start_epoch;
    t.critic_steps = critic_steps;
    t.batch_size = batch_size;
    t.lr_adv = lr_adv;
    t.lr_rl = lr_rl;
    t.lambda_pd = lambda_pd;
    t.lambda_gp = lambda_gp;
    t.ema_alpha = ema_alpha;
    t.diffusion_steps = diffusion_steps;
    t.beta_min = beta_min;
    t.beta_max = beta_max;
    t.seed = seed;
    t.use_rl = !no_rl;
    t.use_cues = !no_cues;
    t.raw_reward = raw_reward;
    t.cue_loss = cues::parse_cue_loss(cue_loss);
    t.eval_interval = eval_interval;
    t.eval = eval_config();
    t.checkpoint_interval = checkpoint_interval;
    t.checkpoint_dir = out;
    return t;
}

data::SyntheticSpec RunConfig::synthetic_spec() const {
    data::SyntheticSpec s;
    s.n_seen = n_seen;
    s.n_unseen = n_unseen;
    s.d = d;
    s.d_z = d_z;
    s.samples_per_class = samples_per_class;
    s.semantic_cluster_size = semantic_cluster_size;
    s.semantic_jitter = semantic_jitter;
    s.visual_separation = visual_separation;
    s.visual_sigma = visual_sigma;
    s.cluster_spread = cluster_spread;
    s.class_spread = class_spread;
    s.test_fraction = test_fraction;
    s.seed = seed;
    return s;
}

softmax::FitConfig RunConfig::reward_fit() const { return {reward_epochs, reward_lr, reward_batch_size}; }

eval::EvalConfig RunConfig::eval_config() const {
    return {synth_per_class, softmax::FitConfig{head_epochs, head_lr, head_batch_size}};
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
    T v{};
    const char* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("invalid value '" + s + "' for key " + key);
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string ConfigKey::get() const {
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, bool>)
                return *p ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>)
                return *p;
            else if constexpr (std::is_same_v<T, double>)
                return data::format_real(*p);
            else
                return std::to_string(*p);
        },
        target);
}

void ConfigKey::set(const std::string& value) const {
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, bool>) {
                if (value == "true" || value == "1" || value == "yes")
                    *p = true;
                else if (value == "false" || value == "0" || value == "no")
                    *p = false;
                else
                    throw ConfigError("invalid boolean '" + value + "' for key " + name);
            } else if constexpr (std::is_same_v<T, std::string>) {
                *p = value;
            } else {
                *p = parse_number<T>(name, value);
            }
        },
        target);
}

std::vector<ConfigKey> config_keys(RunConfig& c) {
    return {
        {"preset", "configuration preset: synthetic, cub, sun or awa2", &c.preset},
        {"dataset", "dataset directory (four-file CSV format)", &c.dataset},
        {"out", "output directory", &c.out},
        {"reward", "reward-model checkpoint (default <out>/reward.ckpt)", &c.reward},
        {"generator", "generator checkpoint (default <out>/generator.ckpt)", &c.generator},
        {"seed", "root seed for every random stream", &c.seed},
        {"overwrite", "allow writing into a non-empty output directory", &c.overwrite},
        {"standardize", "standardize features with train-row statistics", &c.standardize},
        {"epochs", "total training epochs E", &c.epochs},
        {"rl_start_epoch", "cold-start threshold E_RL (zero-based first RL epoch)", &c.rl_start_epoch},
        {"critic_steps", "critic updates K per minibatch", &c.critic_steps},
        {"batch_size", "minibatch size B", &c.batch_size},
        {"lr_adv", "Adam learning rate for critics and the adversarial generator update", &c.lr_adv},
        {"lr_rl", "Adam learning rate for the RL generator update", &c.lr_rl},
        {"lambda_pd", "prototype-distillation weight", &c.lambda_pd},
        {"lambda_gp", "gradient-penalty weight", &c.lambda_gp},
        {"ema_alpha", "EMA baseline smoothing", &c.ema_alpha},
        {"diffusion_steps", "diffusion timesteps T", &c.diffusion_steps},
        {"beta_min", "first noise level of the linear schedule", &c.beta_min},
        {"beta_max", "last noise level of the linear schedule", &c.beta_max},
        {"no_rl", "disable the RL update", &c.no_rl},
        {"no_cues", "disable the visual-cue loss", &c.no_cues},
        {"raw_reward", "use raw rewards as advantages (no EMA baseline)", &c.raw_reward},
        {"cue_loss", "visual-cue loss: pd, kl or l1", &c.cue_loss},
        {"eval_interval", "evaluate every N epochs during training (0 = never)", &c.eval_interval},
        {"checkpoint_interval", "write the generator every N epochs (0 = only at the end)", &c.checkpoint_interval},
        {"n_seen", "synthetic: seen classes", &c.n_seen},
        {"n_unseen", "synthetic: unseen classes", &c.n_unseen},
        {"d", "synthetic: visual feature width", &c.d},
        {"d_z", "synthetic: semantic prototype width", &c.d_z},
        {"samples_per_class", "synthetic: samples per class", &c.samples_per_class},
        {"semantic_cluster_size", "synthetic: classes per semantic cluster", &c.semantic_cluster_size},
        {"semantic_jitter", "synthetic: prototype jitter within a cluster", &c.semantic_jitter},
        {"visual_separation", "synthetic: minimum distance between class means", &c.visual_separation},
        {"visual_sigma", "synthetic: per-class isotropic noise", &c.visual_sigma},
        {"cluster_spread", "synthetic: typical distance between cluster offsets (x separation)", &c.cluster_spread},
        {"class_spread", "synthetic: typical sibling distance (x separation)", &c.class_spread},
        {"test_fraction", "synthetic: held-out fraction of each seen class", &c.test_fraction},
        {"reward_epochs", "reward-model training epochs", &c.reward_epochs},
        {"reward_lr", "reward-model learning rate", &c.reward_lr},
        {"reward_batch_size", "reward-model minibatch size", &c.reward_batch_size},
        {"synth_per_class", "synthesized features per unseen class at evaluation", &c.synth_per_class},
        {"head_epochs", "evaluation classifier epochs", &c.head_epochs},
        {"head_lr", "evaluation classifier learning rate", &c.head_lr},
        {"head_batch_size", "evaluation classifier minibatch size", &c.head_batch_size},
    };
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"synthetic", "cub", "sun", "awa2"};
    return names;
}

void apply_preset(RunConfig& cfg, const std::string& name) {
    cfg.preset = name;
    if (name == "synthetic") {
        cfg.rl_start_epoch = 5;
        cfg.lambda_pd = 5.0;
        cfg.synth_per_class = 200;
        cfg.epochs = 500;
    } else if (name == "cub") {
        cfg.rl_start_epoch = 30;
        cfg.lambda_pd = 20.0;
        cfg.synth_per_class = 400;
        cfg.epochs = 500;
    } else if (name == "sun") {
        cfg.rl_start_epoch = 30;
        cfg.lambda_pd = 1.0;
        cfg.synth_per_class = 400;
        cfg.epochs = 300;
    } else if (name == "awa2") {
        cfg.rl_start_epoch = 7;
        cfg.lambda_pd = 5.0;
        cfg.synth_per_class = 4000;
        cfg.epochs = 30;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected synthetic, cub, sun or awa2)");
    }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_values(RunConfig& cfg, const std::map<std::string, std::string>& values) {
    auto keys = config_keys(cfg);
    for (const auto& [k, v] : values) {
        auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& key) { return key.name == k; });
        if (it == keys.end()) throw ConfigError("unknown config key '" + k + "'");
        it->set(v);
    }
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& overrides) {
    RunConfig cfg;
    std::string preset = "synthetic";
    if (auto it = file_values.find("preset"); it != file_values.end()) preset = it->second;
    if (auto it = overrides.find("preset"); it != overrides.end()) preset = it->second;
    apply_preset(cfg, preset);
    auto file_rest = file_values;
    file_rest.erase("preset");
    apply_values(cfg, file_rest);
    auto over_rest = overrides;
    over_rest.erase("preset");
    apply_values(cfg, over_rest);
    return cfg;
}

std::string dump_config(const RunConfig& cfg) {
    RunConfig copy = cfg;
    std::ostringstream out;
    for (const auto& k : config_keys(copy)) out << k.name << " = " << k.get() << '\n';
    return out.str();
}

}  // namespace rlvc
