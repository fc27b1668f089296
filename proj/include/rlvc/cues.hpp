#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "rlvc/nn.hpp"

namespace rlvc::cues {

using nn::Matrix;
using nn::Vector;

/// Per-class mean of real training features.
struct VisualPrototypeTable {
    std::map<int, Vector> prototypes;
    std::map<int, int> counts;

    const Vector& at(int class_id) const;
    /// One row per label, in order.
    Matrix gather(std::span<const int> class_ids) const;
};

enum class CueLoss { CosinePd, Kl, L1 };

CueLoss parse_cue_loss(const std::string& name);
std::string to_string(CueLoss loss);

struct CueConfig {
    double lambda_pd = 5.0;
    CueLoss variant = CueLoss::CosinePd;
};

/// Throws ConfigError if a seen class has no sample and NumericError if a
/// class mean has zero norm.
VisualPrototypeTable mine_prototypes(const Matrix& features, std::span<const int> labels,
                                     std::span<const int> seen_classes);

/// Tape-level losses; prototypes enter as constants.
/// Cosine: mean(1 - cos(x_i, v_{c_i})). A zero-norm row contributes 1 and a
/// warning is logged.
nn::Var pd_loss_on_tape(nn::Var x, std::span<const int> labels, const VisualPrototypeTable& table);
/// mean_i KL(softmax(v_{c_i}) || softmax(x_i)).
nn::Var kl_loss_on_tape(nn::Var x, std::span<const int> labels, const VisualPrototypeTable& table);
/// mean_i mean_j |x_ij - v_{c_i} j|.
nn::Var l1_loss_on_tape(nn::Var x, std::span<const int> labels, const VisualPrototypeTable& table);
nn::Var cue_loss_on_tape(CueLoss variant, nn::Var x, std::span<const int> labels, const VisualPrototypeTable& table);

/// Value and gradient w.r.t. the batch rows.
struct BatchLoss {
    double value = 0.0;
    Matrix grad;
};
BatchLoss pd_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table);
BatchLoss kl_variant_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table);
BatchLoss l1_variant_loss(const Matrix& x, std::span<const int> labels, const VisualPrototypeTable& table);

/// adv + lambda_pd * cue.
double generator_total_loss(double adv_loss, double cue_loss, const CueConfig& config);
nn::Var generator_total_loss(nn::Var adv_loss, nn::Var cue_loss, const CueConfig& config);

/// "class_id v_1 ... v_d" per line, space separated.
void export_prototypes(const VisualPrototypeTable& table, const std::filesystem::path& path);

}  // namespace rlvc::cues
