#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rlvc/rng.hpp"
#include "rlvc/tape.hpp"

namespace rlvc::nn {

inline constexpr double kLeakySlope = 0.2;

/// Multilayer affine network: leaky-relu on every hidden layer, linear output.
/// Layer l maps layer_dims[l] -> layer_dims[l+1]; its weight is stored
/// out x in and its bias as a 1 x out row.
class DenseNet {
public:
    DenseNet() = default;
    /// All parameters zero.
    explicit DenseNet(std::vector<int> layer_dims, double slope = kLeakySlope);
    /// Weights ~ N(0, 2/fan_in), biases zero.
    static DenseNet he_normal(std::vector<int> layer_dims, Rng& rng, double slope = kLeakySlope);

    const std::vector<int>& layer_dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    std::size_t num_layers() const { return weights_.size(); }
    double slope() const { return slope_; }

    Matrix& weight(std::size_t l) { return weights_.at(l); }
    const Matrix& weight(std::size_t l) const { return weights_.at(l); }
    Matrix& bias(std::size_t l) { return biases_.at(l); }
    const Matrix& bias(std::size_t l) const { return biases_.at(l); }

    /// Parameters in checkpoint order: W0, b0, W1, b1, ...
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::size_t parameter_count() const;

    Matrix forward(const Matrix& batch) const;

    /// Throws NumericError naming the first non-finite parameter.
    void check_finite() const;

    bool operator==(const DenseNet& other) const;

private:
    std::vector<int> dims_;
    double slope_ = kLeakySlope;
    std::vector<Matrix> weights_;
    std::vector<Matrix> biases_;
};

/// A DenseNet's parameters placed on a tape, either as variables (gradients
/// wanted) or as constants (frozen for this evaluation).
struct BoundNet {
    const DenseNet* net = nullptr;
    std::vector<Var> params;

    std::vector<Matrix> gradients(const Tape& tape) const;
};

BoundNet bind(Tape& tape, const DenseNet& net, bool trainable);

struct NetTrace {
    Var output;
    /// Derivative of each hidden activation at its pre-activation.
    std::vector<Matrix> slopes;
};

NetTrace forward(const BoundNet& bound, Var input);

/// Builds, on the tape, d(sum of outputs)/d(input[:, start:start+count]) for
/// a scalar-output net. The result is itself differentiable w.r.t. the
/// network parameters; leaky-relu slopes are piecewise constant, so they
/// enter as constants.
Var input_gradient(const BoundNet& bound, const NetTrace& trace, Eigen::Index start, Eigen::Index count);

struct AdamConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    long step_count = 0;

    explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One bias-corrected Adam update. A non-finite gradient leaves both the
/// parameters and the state untouched and throws NumericError.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);

struct LossAndGrad {
    double value = 0.0;
    std::vector<Matrix> grads;
};

/// Central-difference check of `loss_fn` against its own analytic gradients.
/// `loss_fn` reads the parameters through `params`; each entry is perturbed
/// in place and restored. Returns max |a - n| / max(|a|, |n|, 1e-6).
double finite_difference_check(const std::function<LossAndGrad()>& loss_fn, std::span<Matrix* const> params,
                               double step);

}  // namespace rlvc::nn
