#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rlvc/config.hpp"
#include "rlvc/errors.hpp"
#include "rlvc/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kNumeric = 3 };

std::string dashed(std::string name) {
    for (char& c : name)
        if (c == '_') c = '-';
    return name;
}

int run(const std::string& command, const rlvc::RunConfig& cfg) {
    using namespace rlvc;
    if (command == "gen-synthetic") {
        const auto dir = pipeline::gen_synthetic(cfg);
        std::cout << "wrote synthetic dataset to " << dir.string() << '\n';
    } else if (command == "pretrain-reward") {
        const auto res = pipeline::pretrain_reward(cfg);
        std::cout << "train_accuracy=" << data::format_real(res.train_accuracy) << '\n';
        std::cout << "wrote reward model to " << res.checkpoint.string() << '\n';
    } else if (command == "train") {
        const auto res = pipeline::train(cfg, &std::cerr);
        std::cout << "wrote generator to " << res.generator.string() << '\n';
        std::cout << "wrote metrics log to " << res.metrics_log.string() << '\n';
    } else if (command == "synthesize") {
        const auto dir = pipeline::synthesize(cfg);
        std::cout << "wrote synthesized features to " << dir.string() << '\n';
    } else if (command == "eval") {
        std::cout << pipeline::evaluate(cfg).to_line() << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion-GAN feature generator for zero-shot learning"};
    app.require_subcommand(1);

    rlvc::RunConfig defaults;
    rlvc::apply_preset(defaults, "synthetic");
    auto keys = rlvc::config_keys(defaults);

    std::string config_path;
    bool print_config = false;
    std::map<std::string, std::string> overrides;

    const std::pair<const char*, const char*> commands[] = {
        {"gen-synthetic", "write the synthetic benchmark to --out"},
        {"pretrain-reward", "train and freeze the reward classifier on seen classes"},
        {"train", "train the generator"},
        {"synthesize", "export synthesized unseen-class features"},
        {"eval", "synthesize, fit the CZSL/GZSL heads and report acc, u, s, h"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
        for (const auto& key : keys) {
            const std::string flag = "--" + dashed(key.name);
            const std::string doc = key.doc + " (default: " + key.get() + ")";
            const std::string k = key.name;
            if (key.is_flag()) {
                sub->add_flag_function(
                    flag, [&overrides, k](std::int64_t n) { overrides[k] = n > 0 ? "true" : "false"; }, doc);
            } else {
                sub->add_option_function<std::string>(
                    flag, [&overrides, k](const std::string& v) { overrides[k] = v; }, doc);
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        std::map<std::string, std::string> file_values;
        if (!config_path.empty()) file_values = rlvc::read_config_file(config_path);
        const rlvc::RunConfig cfg = rlvc::resolve_config(file_values, overrides);
        if (print_config) {
            std::cout << rlvc::dump_config(cfg);
            return kOk;
        }
        return run(command, cfg);
    } catch (const rlvc::train::TrainingAborted& e) {
        std::cerr << "rlvc: numeric failure at epoch " << e.epoch() << ", minibatch " << e.batch() << ": "
                  << e.what() << '\n';
        return kNumeric;
    } catch (const rlvc::NumericError& e) {
        std::cerr << "rlvc: numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const rlvc::UsageError& e) {
        std::cerr << "rlvc: " << e.what() << '\n';
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "rlvc: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "rlvc: " << e.what() << '\n';
        return kInput;
    }
}
