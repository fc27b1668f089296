#include "rlvc/cues.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "rlvc/errors.hpp"

namespace rlvc::cues {

using nn::Var;

const Vector& VisualPrototypeTable::at(int class_id) const {
    auto it = prototypes.find(class_id);
    if (it == prototypes.end()) throw ConfigError("no visual prototype for class " + std::to_string(class_id));
    return it->second;
}

Matrix VisualPrototypeTable::gather(std::span<const int> class_ids) const {
    if (prototypes.empty()) throw ConfigError("empty prototype table");
    Matrix out(static_cast<Eigen::Index>(class_ids.size()), prototypes.begin()->second.size());
    for (std::size_t i = 0; i < class_ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = at(class_ids[i]);
    return out;
}

CueLoss parse_cue_loss(const std::string& name) {
    if (name == "pd" || name == "cosine-pd") return CueLoss::CosinePd;
    if (name == "kl") return CueLoss::Kl;
    if (name == "l1") return CueLoss::L1;
    throw ConfigError("unknown cue loss '" + name + "' (expected pd, kl or l1)");
}

std::string to_string(CueLoss loss) {
    switch (loss) {
        case CueLoss::CosinePd: return "pd";
        case CueLoss::Kl: return "kl";
        case CueLoss::L1: return "l1";
    }
    return "pd";
}

VisualPrototypeTable mine_prototypes(const Matrix& features, std::span<const int> labels,
                                     std::span<const int> seen_classes) {
    if (static_cast<Eigen::Index>(labels.size()) != features.rows())
        throw ConfigError("mine_prototypes: label count does not match feature rows");
    VisualPrototypeTable table;
    for (int c : seen_classes) {
        table.prototypes[c] = Vector::Zero(features.cols());
        table.counts[c] = 0;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = table.prototypes.find(labels[i]);
        if (it == table.prototypes.end()) continue;
        it->second += features.row(static_cast<Eigen::Index>(i)).transpose();
        ++table.counts[labels[i]];
    }
    for (auto& [c, v] : table.prototypes) {
        const int n = table.counts[c];
        if (n == 0) throw ConfigError("seen class " + std::to_string(c) + " has no training samples");
        v /= static_cast<double>(n);
        if (!(v.norm() > 0.0))
            throw NumericError("visual prototype of class " + std::to_string(c) + " has zero norm (" +
                               std::to_string(n) + " samples); the cosine distillation loss is undefined");
    }
    return table;
}

Var pd_loss_on_tape(Var x, std::span<const int> labels, const VisualPrototypeTable& table) {
    const Matrix v = table.gather(labels);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x.value().row(i).norm() == 0.0)
            std::cerr << "warning: zero-norm synthesized feature in row " << i
                      << "; its distillation term is taken as 1\n";
    return nn::mean(nn::scale(nn::add_scalar(nn::cosine_rows(x, v), -1.0), -1.0));
}

Var kl_loss_on_tape(Var x, std::span<const int> labels, const VisualPrototypeTable& table) {
    const Matrix v = table.gather(labels);
    Matrix p(v.rows(), v.cols());
    double entropy_term = 0.0;  // sum_i sum_j p log p
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double m = v.row(i).maxCoeff();
        const double lse = m + std::log((v.row(i).array() - m).exp().sum());
        const Eigen::RowVectorXd logp = v.row(i).array() - lse;
        p.row(i) = logp.array().exp();
        entropy_term += (p.row(i).array() * logp.array()).sum();
    }
    const double b = static_cast<double>(v.rows());
    // KL = sum p log p - sum p log q, averaged over rows.
    Var cross = nn::sum(nn::mul_const(nn::log_softmax_rows(x), p));
    return nn::add_scalar(nn::scale(cross, -1.0 / b), entropy_term / b);
}

Var l1_loss_on_tape(Var x, std::span<const int> labels, const VisualPrototypeTable& table) {
    const Matrix v = table.gather(labels);
    return nn::mean(nn::abs(nn::sub(x, x.tape->constant(v))));
}

Var cue_loss_on_tape(CueLoss variant, Var x, std::span<const int> labels, const VisualPrototypeTable& table) {
    switch (variant) {
        case CueLoss::CosinePd: return pd_loss_on_tape(x, labels, table);
        case CueLoss::Kl: return kl_loss_on_tape(x, labels, table);
        case CueLoss::L1: return l1_loss_on_tape(x, labels, table);
    }
    throw UsageError("unknown cue loss variant");
}

namespace {

BatchLoss evaluate(CueLoss variant, const Matrix& x, std::span<const int> labels,
                   const VisualPrototypeTable& table) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw ConfigError("cue loss: label count mismatch");
    if (x.rows() == 0) throw UsageError("cue loss: empty batch");
    nn::Tape tape;
    Var xv = tape.variable(x);
    Var loss = cue_loss_on_tape(variant, xv, labels, table);
    tape.backward(loss);
    return {loss.value()(0, 0), tape.grad(xv)};
}

}  // namespace

BatchLoss pd_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table) {
    return evaluate(CueLoss::CosinePd, x, labels, table);
}

BatchLoss kl_variant_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table) {
    return evaluate(CueLoss::Kl, x, labels, table);
}

BatchLoss l1_variant_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table) {
    return evaluate(CueLoss::L1, x, labels, table);
}

double generator_total_loss(double adv_loss, double cue_loss, const CueConfig& config) {
    return adv_loss + config.lambda_pd * cue_loss;
}

Var generator_total_loss(Var adv_loss, Var cue_loss, const CueConfig& config) {
    if (config.lambda_pd == 0.0) return adv_loss;
    return nn::add(adv_loss, nn::scale(cue_loss, config.lambda_pd));
}

void export_prototypes(const VisualPrototypeTable& table, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    char buf[32];
    for (const auto& [c, v] : table.prototypes) {
        f << c;
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", v(j));
            f << ' ' << buf;
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace rlvc::cues
