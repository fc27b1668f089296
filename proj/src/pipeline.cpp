#include "rlvc/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "rlvc/checkpoint.hpp"
#include "rlvc/cues.hpp"
#include "rlvc/errors.hpp"

namespace rlvc::pipeline {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
}

gan::Generator load_generator(const RunConfig& cfg) {
    return gan::Generator::from_net(nn::load_checkpoint(cfg.generator_path(), nn::NetKind::Generator));
}

}  // namespace

data::ZslDataset load(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset directory given (--dataset)");
    auto ds = data::load_dataset(cfg.dataset);
    if (cfg.standardize) data::standardize(ds);
    return ds;
}

fs::path gen_synthetic(const RunConfig& cfg) {
    const fs::path out = cfg.out;
    if (fs::exists(out) && !fs::is_empty(out) && !cfg.overwrite)
        throw ConfigError("output directory " + out.string() + " is not empty (pass --overwrite)");
    const auto ds = data::make_synthetic(cfg.synthetic_spec());
    data::save_dataset(ds, out);
    return out;
}

std::vector<int> seen_indices(const data::ZslDataset& ds, std::span<const int> rows) {
    const auto seen = ds.seen_classes();
    std::vector<int> out;
    out.reserve(rows.size());
    for (int r : rows) {
        const int y = ds.labels[static_cast<std::size_t>(r)];
        auto it = std::lower_bound(seen.begin(), seen.end(), y);
        if (it == seen.end() || *it != y)
            throw ConfigError("row " + std::to_string(r) + " has unseen class " + std::to_string(y));
        out.push_back(static_cast<int>(it - seen.begin()));
    }
    return out;
}

PretrainResult pretrain_reward(const RunConfig& cfg) {
    const auto ds = load(cfg);
    const auto rows = ds.rows(data::Split::Train);
    if (rows.empty()) throw ConfigError("dataset has no train rows");
    const auto y = seen_indices(ds, rows);
    const nn::Matrix x = ds.features_of(rows);
    Rng rng = make_stream(cfg.seed, "reward");
    const int classes = static_cast<int>(ds.seen_classes().size());
    PretrainResult res{rl::pretrain_reward(x, y, classes, cfg.reward_fit(), rng), 0.0, cfg.reward_path()};
    res.train_accuracy = rl::accuracy(res.model, x, y);
    fs::create_directories(res.checkpoint.parent_path().empty() ? fs::path(".") : res.checkpoint.parent_path());
    nn::save_checkpoint(res.model.net(), nn::NetKind::RewardModel, res.checkpoint);
    return res;
}

TrainResult train(const RunConfig& cfg, std::ostream* progress) {
    const auto tc = cfg.train_config();
    tc.validate();
    const auto ds = load(cfg);
    rl::RewardModel reward(nn::load_checkpoint(cfg.reward_path(), nn::NetKind::RewardModel));
    reward.freeze();
    const auto train_rows = ds.rows(data::Split::Train);
    const auto table =
        cues::mine_prototypes(ds.features_of(train_rows), ds.labels_of(train_rows), ds.seen_classes());

    const fs::path out = cfg.out;
    fs::create_directories(out);
    write_text(out / "config.txt", dump_config(cfg));
    cues::export_prototypes(table, out / "prototypes.txt");

    TrainResult res;
    res.generator = cfg.generator_path();
    res.metrics_log = out / "metrics.csv";
    train::Trainer trainer(ds, reward, table, tc);
    try {
        trainer.run([&](const train::MetricsRow& row) {
            if (progress) *progress << train::format_metrics_row(row) << '\n' << std::flush;
        });
    } catch (const train::TrainingAborted&) {
        train::write_metrics(trainer.metrics(), res.metrics_log);
        throw;
    }
    res.metrics = trainer.metrics();
    res.counters = trainer.counters();
    train::write_metrics(res.metrics, res.metrics_log);
    if (!res.generator.parent_path().empty()) fs::create_directories(res.generator.parent_path());
    nn::save_checkpoint(trainer.generator().net, nn::NetKind::Generator, res.generator);
    return res;
}

fs::path synthesize(const RunConfig& cfg) {
    const auto ds = load(cfg);
    const auto gen = load_generator(cfg);
    const auto synth = eval::synthesize_unseen(gen, ds, cfg.synth_per_class, cfg.train_config().schedule(), cfg.seed);
    data::export_features(synth.features, synth.labels, cfg.out, data::Split::TestUnseen);
    return cfg.out;
}

eval::EvalReport evaluate(const RunConfig& cfg) {
    const auto ds = load(cfg);
    const auto gen = load_generator(cfg);
    const auto report = eval::run_evaluation(gen, ds, cfg.train_config().schedule(), cfg.eval_config(), cfg.seed);
    fs::create_directories(cfg.out);
    write_text(fs::path(cfg.out) / "report.txt", report.to_line() + "\n");
    return report;
}

}  // namespace rlvc::pipeline
