#pragma once

#include <span>
#include <vector>

#include "rlvc/diffusion.hpp"
#include "rlvc/nn.hpp"

namespace rlvc::gan {

using nn::Matrix;
using nn::Vector;

inline constexpr int kTimeEmbedDim = 16;

/// Sinusoidal embedding, one row per timestep: [sin(t w_0), cos(t w_0), ...]
/// with w_k = 10000^(-2k/16).
Matrix timestep_embedding(std::span<const int> t);

/// G(eps, z, x_noisy, t) -> x0 estimate. Input layout:
/// [eps (d) | z (d_z) | x_noisy (d) | embed(t) (16)].
struct Generator {
    nn::DenseNet net;
    int feature_dim = 0;
    int semantic_dim = 0;

    static Generator create(int feature_dim, int semantic_dim, Rng& rng);
    /// Wraps a loaded network; throws ConfigError if its shape cannot be a generator.
    static Generator from_net(nn::DenseNet net);
};

/// D_x0(x, z): [x (d) | z (d_z)] -> scalar.
struct CriticX0 {
    nn::DenseNet net;
    int feature_dim = 0;
    int semantic_dim = 0;

    static CriticX0 create(int feature_dim, int semantic_dim, Rng& rng);
};

/// D_xt(x_t, x_{t+1}, z, t): [x_t (d) | x_next (d) | z (d_z) | embed(t) (16)] -> scalar.
struct CriticXt {
    nn::DenseNet net;
    int feature_dim = 0;
    int semantic_dim = 0;

    static CriticXt create(int feature_dim, int semantic_dim, Rng& rng);
};

struct GpConfig {
    double lambda_gp = 10.0;
};

/// Pure forward pass of the generator. `t_cond` is the timestep of x_noisy.
Matrix synthesize(const Generator& gen, const Matrix& z, const Matrix& x_noisy, std::span<const int> t_cond,
                  const Matrix& eps);
Vector synthesize(const Generator& gen, const Vector& z, const Vector& x_noisy, int t_cond, const Vector& eps);

/// Real transitions plus every random draw one generator evaluation needs.
/// Row i pairs (xt, x_next) at timestep t[i] -> t[i]+1.
struct TransitionBatch {
    Matrix x0;
    Matrix z;
    std::vector<int> labels;
    std::vector<int> t;
    Matrix xt;
    Matrix x_next;
    Matrix gen_noise;
    Matrix post_noise;

    Eigen::Index size() const { return x0.rows(); }
};

/// Draws t ~ U{0..T-1}, x_t ~ q(x_t | x0), x_{t+1} ~ q(x_{t+1} | x_t) and the
/// generator/posterior noise.
TransitionBatch sample_transitions(const Matrix& x0, const Matrix& z, std::vector<int> labels,
                                   const diffusion::Schedule& sched, Rng& rng);

struct SynthesisVars {
    nn::Var x0_hat;
    nn::Var xt_hat;
};

/// x0_hat = G(eps, z, x_{t+1}, t+1); xt_hat = posterior mean + sigma * noise.
/// Gradients reach the generator through both outputs.
SynthesisVars synthesize_on_tape(nn::Tape& tape, const nn::BoundNet& gen, const TransitionBatch& batch,
                                 const diffusion::Schedule& sched);

nn::Var critic_x0_loss_on_tape(nn::Tape& tape, const nn::BoundNet& critic, const Matrix& real, nn::Var fake,
                               const Matrix& z, const Vector& u, const GpConfig& gp);
nn::Var critic_xt_loss_on_tape(nn::Tape& tape, const nn::BoundNet& critic, const Matrix& real_xt,
                               const Matrix& x_next, nn::Var fake_xt, const Matrix& z, std::span<const int> t,
                               const Vector& u, const GpConfig& gp);
/// -mean D_x0(x0_hat, z) - mean D_xt(xt_hat, x_next, z, t).
nn::Var generator_adv_loss_on_tape(nn::Tape& tape, const SynthesisVars& fake, const nn::BoundNet& critic_x0,
                                   const nn::BoundNet& critic_xt, const TransitionBatch& batch);

/// Gradient penalty alone: mean over rows of (||grad_x D(x_hat, ...)||_2 - 1)^2.
double gradient_penalty_x0(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                           const Vector& u);

/// -mean D(real, z) + mean D(fake, z) + lambda_gp * GP; x_hat = u real + (1-u) fake
/// per row. `fake` is a constant; gradients are w.r.t. the critic.
nn::LossAndGrad critic_x0_loss(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                               const Vector& u, const GpConfig& gp);
nn::LossAndGrad critic_x0_loss(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                               const GpConfig& gp, Rng& rng);

/// Interpolation acts on the x_t argument only.
nn::LossAndGrad critic_xt_loss(const CriticXt& critic, const Matrix& real_xt, const Matrix& x_next,
                               const Matrix& fake_xt, const Matrix& z, std::span<const int> t, const Vector& u,
                               const GpConfig& gp);
nn::LossAndGrad critic_xt_loss(const CriticXt& critic, const Matrix& real_xt, const Matrix& x_next,
                               const Matrix& fake_xt, const Matrix& z, std::span<const int> t, const GpConfig& gp,
                               Rng& rng);

struct CriticLoss {
    double value = 0.0;
    std::vector<Matrix> x0_grads;
    std::vector<Matrix> xt_grads;
};

/// L_D = L_Dx0 + L_Dxt on the generator's current outputs for `batch`
/// (generator held constant).
CriticLoss total_critic_loss(const CriticX0& cx0, const CriticXt& cxt, const Generator& gen,
                             const TransitionBatch& batch, const diffusion::Schedule& sched, const Vector& u_x0,
                             const Vector& u_xt, const GpConfig& gp);

/// Generator adversarial loss with both critics frozen; gradients w.r.t. the generator.
nn::LossAndGrad generator_adv_loss(const Generator& gen, const CriticX0& cx0, const CriticXt& cxt,
                                   const TransitionBatch& batch, const diffusion::Schedule& sched);

}  // namespace rlvc::gan
