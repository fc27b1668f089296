#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rlvc/config.hpp"
#include "rlvc/cues.hpp"
#include "rlvc/errors.hpp"
#include "rlvc/pipeline.hpp"

namespace py = pybind11;
using namespace rlvc;

namespace {

using Overrides = std::map<std::string, std::string>;

RunConfig resolve(const Overrides& overrides, const std::string& config_file) {
    Overrides file;
    if (!config_file.empty()) file = read_config_file(config_file);
    return resolve_config(file, overrides);
}

py::dict metrics_dict(const train::MetricsRow& r) {
    py::dict d;
    d["epoch"] = r.epoch;
    d["raw_reward_mean"] = r.raw_reward_mean;
    d["ema_baseline"] = r.ema_baseline;
    d["advantage_mean"] = r.advantage_mean;
    d["critic_loss"] = r.critic_loss;
    d["gen_adv_loss"] = r.gen_adv_loss;
    d["pd_loss"] = r.pd_loss;
    d["czsl_acc"] = r.czsl_acc;
    d["gzsl_u"] = r.gzsl_u;
    d["gzsl_s"] = r.gzsl_s;
    d["gzsl_h"] = r.gzsl_h;
    return d;
}

py::dict report_dict(const eval::EvalReport& r) {
    py::dict d;
    d["acc"] = r.acc;
    d["u"] = r.u;
    d["s"] = r.s;
    d["h"] = r.h;
    return d;
}

}  // namespace

PYBIND11_MODULE(_rlvc, m) {
    m.doc() = "Diffusion-GAN zero-shot feature generator";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("resolve_config", [](const Overrides& o, const std::string& f) { return dump_config(resolve(o, f)); },
          py::arg("overrides") = Overrides{}, py::arg("config_file") = "",
          "Resolved configuration as 'key = value' text.");

    m.def("gen_synthetic", [](const Overrides& o, const std::string& f) { return pipeline::gen_synthetic(resolve(o, f)); },
          py::arg("overrides"), py::arg("config_file") = "");
    m.def(
        "pretrain_reward",
        [](const Overrides& o, const std::string& f) { return pipeline::pretrain_reward(resolve(o, f)).train_accuracy; },
        py::arg("overrides"), py::arg("config_file") = "", "Returns the reward model's train accuracy.");
    m.def(
        "train",
        [](const Overrides& o, const std::string& f) {
            const auto cfg = resolve(o, f);
            pipeline::TrainResult res;
            {
                py::gil_scoped_release release;
                res = pipeline::train(cfg);
            }
            py::list rows;
            for (const auto& r : res.metrics) rows.append(metrics_dict(r));
            return rows;
        },
        py::arg("overrides"), py::arg("config_file") = "", "Trains the generator; returns per-epoch metrics.");
    m.def("synthesize", [](const Overrides& o, const std::string& f) { return pipeline::synthesize(resolve(o, f)); },
          py::arg("overrides"), py::arg("config_file") = "");
    m.def(
        "evaluate",
        [](const Overrides& o, const std::string& f) {
            const auto cfg = resolve(o, f);
            eval::EvalReport r;
            {
                py::gil_scoped_release release;
                r = pipeline::evaluate(cfg);
            }
            return report_dict(r);
        },
        py::arg("overrides"), py::arg("config_file") = "");

    m.def(
        "load_dataset",
        [](const std::filesystem::path& dir) {
            const auto ds = data::load_dataset(dir);
            std::vector<std::string> splits, roles;
            for (auto s : ds.splits) splits.emplace_back(data::to_string(s));
            for (auto r : ds.roles) roles.emplace_back(data::to_string(r));
            py::dict d;
            d["features"] = ds.features;
            d["labels"] = ds.labels;
            d["splits"] = splits;
            d["roles"] = roles;
            d["prototypes"] = ds.prototypes;
            return d;
        },
        py::arg("directory"));

    m.def("harmonic_mean", &eval::harmonic_mean, py::arg("s"), py::arg("u"));

    py::class_<diffusion::Schedule>(m, "Schedule")
        .def_static("linear", &diffusion::Schedule::linear, py::arg("steps"), py::arg("beta_min"), py::arg("beta_max"))
        .def_static("from_betas", &diffusion::Schedule::from_betas, py::arg("betas"))
        .def_property_readonly("steps", &diffusion::Schedule::steps)
        .def("beta", &diffusion::Schedule::beta)
        .def("alpha_bar", &diffusion::Schedule::alpha_bar)
        .def("posterior", [](const diffusion::Schedule& s, int t) {
            const auto p = s.posterior(t);
            return py::make_tuple(p.c_x0, p.c_next, p.var);
        });

    m.def(
        "log_softmax_reward",
        [](const Eigen::MatrixXd& weight, const Eigen::RowVectorXd& bias, const Eigen::VectorXd& x, int y) {
            nn::DenseNet net({static_cast<int>(weight.cols()), static_cast<int>(weight.rows())});
            if (bias.size() != weight.rows()) throw ConfigError("bias length must equal the weight's row count");
            net.weight(0) = weight;
            net.bias(0) = bias;
            return rl::reward(rl::RewardModel(net), x, y);
        },
        py::arg("weight"), py::arg("bias"), py::arg("x"), py::arg("y"),
        "log softmax(W x + b)_y for a linear reward model.");

    m.def(
        "pd_loss",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& prototypes) {
            if (x.rows() != prototypes.rows() || x.cols() != prototypes.cols())
                throw ConfigError("features and prototypes must have the same shape");
            cues::VisualPrototypeTable table;
            std::vector<int> labels;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                table.prototypes[static_cast<int>(i)] = prototypes.row(i).transpose();
                labels.push_back(static_cast<int>(i));
            }
            const auto r = cues::pd_loss(x, labels, table);
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("x"), py::arg("prototypes"), "Mean cosine distance of each row to the matching prototype row.");

    py::class_<rl::EmaBaseline>(m, "EmaBaseline")
        .def(py::init<double>(), py::arg("alpha") = 0.9)
        .def("update", [](rl::EmaBaseline& b, const std::vector<double>& r) { b.update(r); }, py::arg("rewards"))
        .def("reset", &rl::EmaBaseline::reset)
        .def_property_readonly("value", &rl::EmaBaseline::value)
        .def_property_readonly("initialized", &rl::EmaBaseline::initialized);
}
