#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rlvc/config.hpp"
#include "rlvc/errors.hpp"
#include "rlvc/pipeline.hpp"

using namespace rlvc;
using rlvc::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Exit status of the rlvc tool; stdout goes to `out` when given.
int cli(const std::string& args, const std::filesystem::path& out = "/dev/null") {
    const std::string cmd = std::string(RLVC_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("presets set their documented values") {
    RunConfig c;
    apply_preset(c, "cub");
    CHECK(c.rl_start_epoch == 30);
    CHECK(c.lambda_pd == 20.0);
    CHECK(c.synth_per_class == 400);
    apply_preset(c, "sun");
    CHECK(c.lambda_pd == 1.0);
    apply_preset(c, "awa2");
    CHECK(c.rl_start_epoch == 7);
    CHECK(c.synth_per_class == 4000);
    apply_preset(c, "synthetic");
    CHECK(c.rl_start_epoch == 5);
    CHECK(c.lambda_pd == 5.0);
    CHECK_THROWS_AS(apply_preset(c, "imagenet"), ConfigError);
}

TEST_CASE("precedence: defaults < preset < file < overrides") {
    const auto file = parse_config_text("# comment\npreset = cub\nlambda_pd = 3.5  # inline\nepochs = 7\n\n");
    const auto c = resolve_config(file, {{"epochs", "9"}});
    CHECK(c.preset == "cub");
    CHECK(c.rl_start_epoch == 30);  // preset
    CHECK(c.lambda_pd == 3.5);      // file over preset
    CHECK(c.epochs == 9);           // override over file
    CHECK(c.lr_rl == 5e-5);         // default

    const auto d = resolve_config(file, {{"preset", "sun"}});
    CHECK(d.preset == "sun");
    CHECK(d.lambda_pd == 3.5);
}

TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(parse_config_text("epochs 5\n"), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"epoch", "5"}}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"epochs", "five"}}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"epochs", "5x"}}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config({}, {{"no_rl", "maybe"}}), ConfigError);
    CHECK_THROWS_AS(read_config_file("/nonexistent/rlvc.cfg"), IoError);
}

TEST_CASE("dump and re-parse reproduce the configuration") {
    auto c = resolve_config({}, {{"seed", "18446744073709551615"}, {"lr_adv", "0.000123"}, {"no_cues", "true"}});
    const auto text = dump_config(c);
    CHECK(text.find("seed = 18446744073709551615\n") != std::string::npos);
    CHECK(text.find("no_cues = true\n") != std::string::npos);
    const auto again = resolve_config(parse_config_text(text), {});
    CHECK(dump_config(again) == text);
}

TEST_CASE("derived configurations") {
    auto c = resolve_config({}, {{"out", "/tmp/x"}, {"no_rl", "1"}, {"cue_loss", "kl"}});
    CHECK(c.reward_path() == "/tmp/x/reward.ckpt");
    CHECK(c.generator_path() == "/tmp/x/generator.ckpt");
    const auto t = c.train_config();
    CHECK_FALSE(t.use_rl);
    CHECK(t.use_cues);
    CHECK(t.cue_loss == cues::CueLoss::Kl);
    CHECK(t.checkpoint_dir == "/tmp/x");
    c.cue_loss = "bogus";
    CHECK_THROWS_AS(c.train_config(), ConfigError);
}

TEST_CASE("gen-synthetic refuses a non-empty directory") {
    TempDir dir("gen");
    auto c = resolve_config({}, {{"out", dir.path().string()}, {"n_seen", "4"}, {"n_unseen", "1"}, {"d", "8"},
                                 {"d_z", "4"}, {"samples_per_class", "5"}});
    pipeline::gen_synthetic(c);
    CHECK_THROWS_AS(pipeline::gen_synthetic(c), ConfigError);
    c.overwrite = true;
    CHECK_NOTHROW(pipeline::gen_synthetic(c));
    c.dataset = dir.path().string();
    CHECK(pipeline::load(c).num_classes() == 5);
}

TEST_CASE("cli: help, print-config and exit codes") {
    TempDir dir("cli");
    CHECK(cli("--help") == 0);
    CHECK(cli("") == 1);
    CHECK(cli("train --no-such-flag") == 1);
    CHECK(cli("train --print-config --epochs 3 --preset awa2", dir / "cfg.txt") == 0);
    const auto printed = slurp(dir / "cfg.txt");
    CHECK(printed.find("epochs = 3\n") != std::string::npos);
    CHECK(printed.find("rl_start_epoch = 7\n") != std::string::npos);

    std::ofstream(dir / "f.cfg") << "lambda_pd = 2\n";
    CHECK(cli("eval --print-config --config " + (dir / "f.cfg").string(), dir / "cfg2.txt") == 0);
    CHECK(slurp(dir / "cfg2.txt").find("lambda_pd = 2\n") != std::string::npos);

    CHECK(cli("train --dataset " + (dir / "missing").string()) == 2);
    CHECK(cli("pretrain-reward") == 2);
    CHECK(cli("train --preset nope") == 2);
    CHECK(cli("gen-synthetic --n-seen 0 --out " + (dir / "zero").string()) != 0);
}

TEST_CASE("cli: end-to-end on a small benchmark") {
    TempDir dir("e2e");
    const std::string data = (dir / "data").string(), out = (dir / "out").string();
    const std::string small = " --n-seen 6 --n-unseen 2 --d 8 --d-z 6 --samples-per-class 12";
    REQUIRE(cli("gen-synthetic --out " + data + small) == 0);
    REQUIRE(cli("pretrain-reward --dataset " + data + " --out " + out, dir / "pre.txt") == 0);
    CHECK(slurp(dir / "pre.txt").rfind("train_accuracy=", 0) == 0);
    const std::string train = "train --dataset " + data + " --out " + out + " --epochs 3 --rl-start-epoch 1";
    REQUIRE(cli(train) == 0);
    const auto rows = train::read_metrics(std::filesystem::path(out) / "metrics.csv");
    CHECK(rows.size() == 3u);
    CHECK(std::filesystem::exists(std::filesystem::path(out) / "prototypes.txt"));
    CHECK(std::filesystem::exists(std::filesystem::path(out) / "config.txt"));

    const std::string synth = (dir / "synth").string();
    CHECK(cli("synthesize --dataset " + data + " --generator " + out + "/generator.ckpt --out " + synth +
              " --synth-per-class 4") == 0);
    const auto fs = data::read_features(synth);
    CHECK(fs.features.rows() == 8);
    CHECK(fs.features.cols() == 8);

    CHECK(cli("eval --dataset " + data + " --out " + out + " --synth-per-class 20", dir / "eval.txt") == 0);
    const auto line = slurp(dir / "eval.txt");
    const auto report = eval::EvalReport::parse_line(line.substr(0, line.find('\n')));
    CHECK(report.acc >= 0.0);
    CHECK(slurp(std::filesystem::path(out) / "report.txt") == line);

    // a reward checkpoint is not a generator
    CHECK(cli("eval --dataset " + data + " --generator " + out + "/reward.ckpt") == 2);
    // diverging training reports a numeric failure
    CHECK(cli("train --dataset " + data + " --out " + (dir / "nan").string() + " --reward " + out +
              "/reward.ckpt --epochs 3 --rl-start-epoch 1 --lr-adv 1e300") == 3);
}
