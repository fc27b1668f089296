#include "rlvc/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>

#include "rlvc/errors.hpp"

namespace rlvc::eval {

int worker_threads() {
    int n = 0;
    if (const char* env = std::getenv("RLVC_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return n;
}

Matrix sample_class(const gan::Generator& gen, const Eigen::VectorXd& z, int count, const diffusion::Schedule& sched,
                    Rng& rng) {
    const int d = gen.feature_dim;
    const Matrix zs = z.transpose().replicate(count, 1);
    Matrix x_next = standard_normal(count, d, rng);
    Matrix x0_hat;
    std::vector<int> t_cond(static_cast<std::size_t>(count));
    for (int t = sched.steps() - 1; t >= 0; --t) {
        std::fill(t_cond.begin(), t_cond.end(), t + 1);
        x0_hat = gan::synthesize(gen, zs, x_next, t_cond, standard_normal(count, d, rng));
        const auto p = sched.posterior(t);
        const Matrix noise = standard_normal(count, d, rng);
        x_next = p.c_x0 * x0_hat + p.c_next * x_next + std::sqrt(p.var) * noise;
    }
    return x0_hat;
}

SynthesizedSet synthesize_unseen(const gan::Generator& gen, const data::ZslDataset& ds, int per_class,
                                 const diffusion::Schedule& sched, std::uint64_t seed) {
    if (per_class < 1) throw ConfigError("synthesis needs at least one sample per class");
    if (ds.semantic_dim() != gen.semantic_dim || ds.feature_dim() != gen.feature_dim)
        throw ConfigError("generator layout (d=" + std::to_string(gen.feature_dim) + ", d_z=" +
                          std::to_string(gen.semantic_dim) + ") does not match the dataset (d=" +
                          std::to_string(ds.feature_dim()) + ", d_z=" + std::to_string(ds.semantic_dim()) + ")");
    const auto unseen = ds.unseen_classes();
    if (unseen.empty()) throw ConfigError("dataset has no unseen classes");
    std::vector<Matrix> blocks(unseen.size());
    const std::size_t workers = std::min<std::size_t>(unseen.size(), static_cast<std::size_t>(worker_threads()));
    auto run = [&](std::size_t w) {
        for (std::size_t k = w; k < unseen.size(); k += workers) {
            Rng rng = make_stream(seed, "synth", static_cast<std::uint64_t>(unseen[k]));
            blocks[k] = sample_class(gen, ds.prototypes.row(unseen[k]).transpose(), per_class, sched, rng);
        }
    };
    if (workers <= 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    SynthesizedSet out;
    out.features.resize(static_cast<Eigen::Index>(unseen.size()) * per_class, gen.feature_dim);
    for (std::size_t k = 0; k < unseen.size(); ++k) {
        if (!blocks[k].allFinite())
            throw NumericError("non-finite synthesized feature for class " + std::to_string(unseen[k]));
        out.features.middleRows(static_cast<Eigen::Index>(k) * per_class, per_class) = blocks[k];
        out.labels.insert(out.labels.end(), static_cast<std::size_t>(per_class), unseen[k]);
    }
    return out;
}

std::vector<int> ClassifierHead::predict(const Matrix& features) const {
    auto rows = softmax::predict(net, features);
    for (int& r : rows) r = class_ids[static_cast<std::size_t>(r)];
    return rows;
}

int ClassifierHead::row_of(int class_id) const {
    auto it = std::lower_bound(class_ids.begin(), class_ids.end(), class_id);
    if (it == class_ids.end() || *it != class_id)
        throw ConfigError("class " + std::to_string(class_id) + " is not covered by the classifier head");
    return static_cast<int>(it - class_ids.begin());
}

ClassifierHead train_head(const Matrix& features, std::span<const int> labels, const softmax::FitConfig& config,
                          Rng& rng) {
    ClassifierHead head;
    head.class_ids.assign(labels.begin(), labels.end());
    std::sort(head.class_ids.begin(), head.class_ids.end());
    head.class_ids.erase(std::unique(head.class_ids.begin(), head.class_ids.end()), head.class_ids.end());
    if (head.class_ids.empty()) throw ConfigError("classifier head needs at least one class");
    std::vector<int> rows;
    rows.reserve(labels.size());
    for (int y : labels) rows.push_back(head.row_of(y));
    head.net = softmax::fit(features, rows, static_cast<int>(head.class_ids.size()), config, rng);
    return head;
}

ClassifierHead train_czsl(const SynthesizedSet& unseen, std::span<const int> unseen_classes,
                          const softmax::FitConfig& config, Rng& rng) {
    for (int c : unseen_classes)
        if (std::find(unseen.labels.begin(), unseen.labels.end(), c) == unseen.labels.end())
            throw ConfigError("no synthesized samples for unseen class " + std::to_string(c));
    return train_head(unseen.features, unseen.labels, config, rng);
}

ClassifierHead train_gzsl(const Matrix& seen_features, std::span<const int> seen_labels, const SynthesizedSet& unseen,
                          const softmax::FitConfig& config, Rng& rng) {
    if (seen_features.rows() == 0) throw ConfigError("GZSL head needs real seen features");
    if (unseen.features.rows() == 0) throw ConfigError("GZSL head needs synthesized unseen features");
    if (seen_features.cols() != unseen.features.cols())
        throw ConfigError("seen and synthesized features differ in width");
    Matrix x(seen_features.rows() + unseen.features.rows(), seen_features.cols());
    x << seen_features, unseen.features;
    std::vector<int> y(seen_labels.begin(), seen_labels.end());
    y.insert(y.end(), unseen.labels.begin(), unseen.labels.end());
    return train_head(x, y, config, rng);
}

double macro_accuracy(const ClassifierHead& head, const Matrix& features, std::span<const int> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != features.rows())
        throw ConfigError("macro_accuracy: label count mismatch");
    for (int y : labels) head.row_of(y);
    if (labels.empty()) return 0.0;
    const auto pred = head.predict(features);
    std::map<int, std::pair<int, int>> per_class;  // hits, total
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& [hit, total] = per_class[labels[i]];
        hit += pred[i] == labels[i] ? 1 : 0;
        ++total;
    }
    double sum = 0.0;
    for (const auto& [c, ht] : per_class) sum += static_cast<double>(ht.first) / ht.second;
    return sum / static_cast<double>(per_class.size());
}

double harmonic_mean(double s, double u) { return s + u > 0.0 ? 2.0 * s * u / (s + u) : 0.0; }

std::string EvalReport::to_line() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "acc=%.6f u=%.6f s=%.6f h=%.6f", acc, u, s, h);
    return buf;
}

EvalReport EvalReport::parse_line(const std::string& line) {
    EvalReport r;
    if (std::sscanf(line.c_str(), "acc=%lf u=%lf s=%lf h=%lf", &r.acc, &r.u, &r.s, &r.h) != 4)
        throw ConfigError("cannot parse report line '" + line + "'");
    return r;
}

double evaluate_czsl(const ClassifierHead& head, const data::ZslDataset& ds) {
    const auto rows = ds.rows(data::Split::TestUnseen);
    return macro_accuracy(head, ds.features_of(rows), ds.labels_of(rows));
}

EvalReport evaluate(const ClassifierHead& czsl, const ClassifierHead& gzsl, const data::ZslDataset& ds) {
    EvalReport r;
    r.acc = evaluate_czsl(czsl, ds);
    const auto unseen_rows = ds.rows(data::Split::TestUnseen);
    const auto seen_rows = ds.rows(data::Split::TestSeen);
    r.u = macro_accuracy(gzsl, ds.features_of(unseen_rows), ds.labels_of(unseen_rows));
    r.s = macro_accuracy(gzsl, ds.features_of(seen_rows), ds.labels_of(seen_rows));
    r.h = harmonic_mean(r.s, r.u);
    return r;
}

EvalReport run_evaluation(const gan::Generator& gen, const data::ZslDataset& ds, const diffusion::Schedule& sched,
                          const EvalConfig& config, std::uint64_t seed) {
    const SynthesizedSet synth = synthesize_unseen(gen, ds, config.synth_per_class, sched, seed);
    Rng rng = make_stream(seed, "eval-heads");
    const auto unseen = ds.unseen_classes();
    const ClassifierHead czsl = train_czsl(synth, unseen, config.head, rng);
    const auto train_rows = ds.rows(data::Split::Train);
    const ClassifierHead gzsl =
        train_gzsl(ds.features_of(train_rows), ds.labels_of(train_rows), synth, config.head, rng);
    return evaluate(czsl, gzsl, ds);
}

}  // namespace rlvc::eval
