#include "rlvc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rlvc/checkpoint.hpp"

namespace rlvc::train {

using nn::Tape;
using nn::Var;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (rl_start_epoch < 0) throw ConfigError("rl_start_epoch must be nonnegative");
    if (critic_steps < 1) throw ConfigError("critic_steps must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(lr_adv > 0.0) || !(lr_rl > 0.0)) throw ConfigError("learning rates must be positive");
    if (lambda_pd < 0.0 || lambda_gp < 0.0) throw ConfigError("loss weights must be nonnegative");
    if (!(ema_alpha >= 0.0 && ema_alpha < 1.0)) throw ConfigError("ema_alpha must lie in [0, 1)");
    if (eval_interval < 0 || checkpoint_interval < 0) throw ConfigError("intervals must be nonnegative");
    schedule();
}

Trainer::Trainer(const data::ZslDataset& dataset, const rl::RewardModel& reward_model,
                 const cues::VisualPrototypeTable& prototypes, TrainConfig config)
    : ds_(dataset),
      reward_(reward_model),
      table_(prototypes),
      config_(std::move(config)),
      sched_(config_.schedule()),
      adam_cx0_(nn::AdamConfig{config_.lr_adv}),
      adam_cxt_(nn::AdamConfig{config_.lr_adv}),
      adam_gen_adv_(nn::AdamConfig{config_.lr_adv}),
      adam_gen_rl_(nn::AdamConfig{config_.lr_rl}),
      ema_(config_.ema_alpha),
      rng_train_(make_stream(config_.seed, "train")),
      rng_rl_(make_stream(config_.seed, "rl")) {
    config_.validate();
    if (!reward_.frozen()) throw UsageError("the reward model must be frozen before policy training");
    const auto seen = ds_.seen_classes();
    if (reward_.num_classes() != static_cast<int>(seen.size()) || reward_.feature_dim() != ds_.feature_dim())
        throw ConfigError("reward model shape (" + std::to_string(reward_.feature_dim()) + " -> " +
                          std::to_string(reward_.num_classes()) + ") does not match the dataset's " +
                          std::to_string(seen.size()) + " seen classes of width " +
                          std::to_string(ds_.feature_dim()));
    reward_index_.assign(static_cast<std::size_t>(ds_.num_classes()), -1);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        reward_index_[static_cast<std::size_t>(seen[i])] = static_cast<int>(i);
        table_.at(seen[i]);
    }
    train_rows_ = ds_.rows(data::Split::Train);
    if (train_rows_.empty()) throw ConfigError("dataset has no training rows");

    Rng init = make_stream(config_.seed, "init");
    gen_ = gan::Generator::create(ds_.feature_dim(), ds_.semantic_dim(), init);
    cx0_ = gan::CriticX0::create(ds_.feature_dim(), ds_.semantic_dim(), init);
    cxt_ = gan::CriticXt::create(ds_.feature_dim(), ds_.semantic_dim(), init);
}

int Trainer::reward_index(int class_id) const {
    const int r = reward_index_.at(static_cast<std::size_t>(class_id));
    if (r < 0) throw UsageError("class " + std::to_string(class_id) + " is not a seen class");
    return r;
}

int Trainer::minibatches_per_epoch() const {
    const auto n = static_cast<int>(train_rows_.size());
    return (n + config_.batch_size - 1) / config_.batch_size;
}

Trainer::Minibatch Trainer::sample_minibatch(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, train_rows_.size() - 1);
    Minibatch mb;
    const int b = config_.batch_size;
    mb.x0.resize(b, ds_.feature_dim());
    mb.z.resize(b, ds_.semantic_dim());
    mb.labels.resize(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) {
        const int row = train_rows_[pick(rng)];
        const int y = ds_.labels[static_cast<std::size_t>(row)];
        mb.x0.row(i) = ds_.features.row(row);
        mb.z.row(i) = ds_.prototypes.row(y);
        mb.labels[static_cast<std::size_t>(i)] = y;
    }
    return mb;
}

namespace {

void require_finite(double v, const char* what, int epoch, int batch) {
    if (!std::isfinite(v))
        throw TrainingAborted(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(batch),
                              epoch, batch);
}

}  // namespace

Trainer::StepStats Trainer::step(const Minibatch& mb, bool rl_active, UpdateCounters& counts) {
    StepStats stats;
    const gan::GpConfig gp{config_.lambda_gp};
    const int batch_no = static_cast<int>(counts.gen_adv);

    // (a) critics
    double critic_sum = 0.0;
    for (int k = 0; k < config_.critic_steps; ++k) {
        const auto tb = gan::sample_transitions(mb.x0, mb.z, mb.labels, sched_, rng_train_);
        const nn::Vector u0 = uniform01(tb.size(), rng_train_);
        const nn::Vector ut = uniform01(tb.size(), rng_train_);
        auto loss = gan::total_critic_loss(cx0_, cxt_, gen_, tb, sched_, u0, ut, gp);
        require_finite(loss.value, "critic loss", epoch_, batch_no);
        nn::adam_step(cx0_.net.parameters(), loss.x0_grads, adam_cx0_);
        nn::adam_step(cxt_.net.parameters(), loss.xt_grads, adam_cxt_);
        critic_sum += loss.value;
        ++counts.critic;
    }
    stats.critic = critic_sum / config_.critic_steps;

    // (b) adversarial + cue update
    {
        const auto tb = gan::sample_transitions(mb.x0, mb.z, mb.labels, sched_, rng_train_);
        Tape tape;
        nn::BoundNet g = nn::bind(tape, gen_.net, true);
        nn::BoundNet c0 = nn::bind(tape, cx0_.net, false);
        nn::BoundNet ct = nn::bind(tape, cxt_.net, false);
        const auto fake = gan::synthesize_on_tape(tape, g, tb, sched_);
        Var adv = gan::generator_adv_loss_on_tape(tape, fake, c0, ct, tb);
        Var cue = cues::cue_loss_on_tape(config_.cue_loss, fake.x0_hat, tb.labels, table_);
        const cues::CueConfig cue_cfg{config_.use_cues ? config_.lambda_pd : 0.0, config_.cue_loss};
        Var total = cues::generator_total_loss(adv, cue, cue_cfg);
        stats.adv = adv.value()(0, 0);
        stats.cue = cue.value()(0, 0);
        require_finite(total.value()(0, 0), "generator loss", epoch_, batch_no);
        tape.backward(total);
        nn::adam_step(gen_.net.parameters(), g.gradients(tape), adam_gen_adv_);
        ++counts.gen_adv;
    }

    // (c) RL update, separate optimizer, fresh synthesis
    if (rl_active) {
        const auto tb = gan::sample_transitions(mb.x0, mb.z, mb.labels, sched_, rng_rl_);
        std::vector<int> idx;
        idx.reserve(tb.labels.size());
        for (int y : tb.labels) idx.push_back(reward_index(y));
        Tape tape;
        nn::BoundNet g = nn::bind(tape, gen_.net, true);
        const auto fake = gan::synthesize_on_tape(tape, g, tb, sched_);
        Var logp = rl::log_prob_on_tape(tape, reward_, fake.x0_hat, idx);
        const nn::Vector r = logp.value().col(0);
        rl::AdvantageBatch adv;
        if (config_.raw_reward) {
            adv = rl::raw_advantage(r);
        } else {
            ema_.update(r);
            ++counts.ema_writes;
            adv = rl::advantage(r, ema_);
        }
        Var loss = rl::rl_loss_on_tape(adv, logp);
        require_finite(loss.value()(0, 0), "RL loss", epoch_, batch_no);
        tape.backward(loss);
        nn::adam_step(gen_.net.parameters(), g.gradients(tape), adam_gen_rl_);
        ++counts.rl;
        stats.reward = r.mean();
        stats.advantage = adv.advantages.mean();
    }
    return stats;
}

MetricsRow Trainer::run_epoch() {
    if (epoch_ >= config_.epochs) throw UsageError("training already finished");
    const gan::Generator last_good = gen_;
    const bool rl_active = config_.use_rl && epoch_ >= config_.rl_start_epoch;
    UpdateCounters counts;
    MetricsRow row;
    row.epoch = epoch_;
    double critic = 0.0, adv = 0.0, cue = 0.0, reward = 0.0, advantage = 0.0;
    const int m = minibatches_per_epoch();
    try {
        for (int b = 0; b < m; ++b) {
            const Minibatch mb = sample_minibatch(rng_train_);
            const StepStats s = step(mb, rl_active, counts);
            critic += s.critic;
            adv += s.adv;
            cue += s.cue;
            if (s.reward) {
                reward += *s.reward;
                advantage += *s.advantage;
            }
        }
        gen_.net.check_finite();
        cx0_.net.check_finite();
        cxt_.net.check_finite();
    } catch (const NumericError& e) {
        if (!config_.checkpoint_dir.empty()) {
            std::filesystem::create_directories(config_.checkpoint_dir);
            nn::save_checkpoint(last_good.net, nn::NetKind::Generator, config_.checkpoint_dir / "generator.last_good.ckpt");
        }
        gen_ = last_good;
        if (dynamic_cast<const TrainingAborted*>(&e) != nullptr) throw;
        throw TrainingAborted(e.what(), epoch_, static_cast<int>(counts.gen_adv));
    }
    row.critic_loss = critic / m;
    row.gen_adv_loss = adv / m;
    row.pd_loss = cue / m;
    if (counts.rl > 0) {
        row.raw_reward_mean = reward / static_cast<double>(counts.rl);
        row.advantage_mean = advantage / static_cast<double>(counts.rl);
        if (ema_.initialized()) row.ema_baseline = ema_.value();
    }
    const bool last = epoch_ + 1 == config_.epochs;
    if (config_.eval_interval > 0 && ((epoch_ + 1) % config_.eval_interval == 0 || last)) {
        const auto report = eval::run_evaluation(gen_, ds_, sched_, config_.eval, config_.seed);
        row.czsl_acc = report.acc;
        row.gzsl_u = report.u;
        row.gzsl_s = report.s;
        row.gzsl_h = report.h;
    }
    if (config_.checkpoint_interval > 0 && !config_.checkpoint_dir.empty() &&
        (epoch_ + 1) % config_.checkpoint_interval == 0) {
        std::filesystem::create_directories(config_.checkpoint_dir);
        nn::save_checkpoint(gen_.net, nn::NetKind::Generator, config_.checkpoint_dir / "generator.ckpt");
    }
    counters_.push_back(counts);
    metrics_.push_back(row);
    ++epoch_;
    return row;
}

void Trainer::run(const std::function<void(const MetricsRow&)>& on_epoch) {
    while (epoch_ < config_.epochs) {
        const MetricsRow row = run_epoch();
        if (on_epoch) on_epoch(row);
    }
}

std::string metrics_header() {
    return "epoch,raw_reward_mean,ema_baseline,advantage_mean,critic_loss,gen_adv_loss,pd_loss,czsl_acc,gzsl_u,"
           "gzsl_s,gzsl_h";
}

namespace {

std::string cell(double v) { return std::isnan(v) ? "nan" : data::format_real(v); }

double parse_cell(const std::string& s) {
    if (s == "nan") return kNotAValue;
    return std::stod(s);
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
    std::ostringstream out;
    out << r.epoch << ',' << cell(r.raw_reward_mean) << ',' << cell(r.ema_baseline) << ','
        << cell(r.advantage_mean) << ',' << cell(r.critic_loss) << ',' << cell(r.gen_adv_loss) << ','
        << cell(r.pd_loss) << ',' << cell(r.czsl_acc) << ',' << cell(r.gzsl_u) << ',' << cell(r.gzsl_s) << ','
        << cell(r.gzsl_h);
    return out.str();
}

void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << metrics_header() << '\n';
    for (const auto& r : rows) f << format_metrics_row(r) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(f, line);
    if (line != metrics_header()) throw ConfigError(path.string() + ": unexpected metrics header");
    std::vector<MetricsRow> out;
    while (std::getline(f, line)) {
        std::vector<std::string> c;
        std::istringstream in(line);
        std::string field;
        while (std::getline(in, field, ',')) c.push_back(field);
        if (c.size() != 11) throw ConfigError(path.string() + ": malformed metrics row '" + line + "'");
        MetricsRow r;
        r.epoch = std::stoi(c[0]);
        r.raw_reward_mean = parse_cell(c[1]);
        r.ema_baseline = parse_cell(c[2]);
        r.advantage_mean = parse_cell(c[3]);
        r.critic_loss = parse_cell(c[4]);
        r.gen_adv_loss = parse_cell(c[5]);
        r.pd_loss = parse_cell(c[6]);
        r.czsl_acc = parse_cell(c[7]);
        r.gzsl_u = parse_cell(c[8]);
        r.gzsl_s = parse_cell(c[9]);
        r.gzsl_h = parse_cell(c[10]);
        out.push_back(r);
    }
    return out;
}

}  // namespace rlvc::train
