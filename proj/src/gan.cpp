#include "rlvc/gan.hpp"

#include <cmath>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::gan {

using nn::Tape;
using nn::Var;

namespace {

std::vector<int> three_layer(int in, int hidden, int out) { return {in, hidden, hidden, out}; }

void require_rows(const Matrix& m, Eigen::Index rows, const char* what) {
    if (m.rows() != rows)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + " rows, got " +
                          std::to_string(m.rows()));
}

void require_nonempty(Eigen::Index rows, const char* what) {
    if (rows == 0) throw UsageError(std::string(what) + ": empty batch");
}

std::vector<int> shifted(std::span<const int> t, int by) {
    std::vector<int> out(t.begin(), t.end());
    for (int& v : out) v += by;
    return out;
}

Var interpolate(Tape& tape, const Matrix& real, const Matrix& fake, const Vector& u) {
    if (u.size() != real.rows()) throw ConfigError("interpolation weights: length mismatch");
    Matrix mixed = u.asDiagonal() * real + (Vector::Ones(u.size()) - u).asDiagonal() * fake;
    return tape.constant(std::move(mixed));
}

Var penalty(const nn::BoundNet& critic, Var input, Eigen::Index start, Eigen::Index count) {
    nn::NetTrace trace = nn::forward(critic, input);
    Var g = nn::input_gradient(critic, trace, start, count);
    return nn::mean(nn::square(nn::add_scalar(nn::row_norm(g), -1.0)));
}

}  // namespace

Matrix timestep_embedding(std::span<const int> t) {
    Matrix out(static_cast<Eigen::Index>(t.size()), kTimeEmbedDim);
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (int k = 0; k < kTimeEmbedDim / 2; ++k) {
            const double w = std::pow(10000.0, -2.0 * k / kTimeEmbedDim);
            out(static_cast<Eigen::Index>(i), 2 * k) = std::sin(t[i] * w);
            out(static_cast<Eigen::Index>(i), 2 * k + 1) = std::cos(t[i] * w);
        }
    }
    return out;
}

Generator Generator::create(int feature_dim, int semantic_dim, Rng& rng) {
    const int in = 2 * feature_dim + semantic_dim + kTimeEmbedDim;
    return {nn::DenseNet::he_normal(three_layer(in, 4 * feature_dim, feature_dim), rng), feature_dim, semantic_dim};
}

Generator Generator::from_net(nn::DenseNet net) {
    const int d = net.output_dim();
    const int dz = net.input_dim() - 2 * d - kTimeEmbedDim;
    if (dz <= 0)
        throw ConfigError("network with input width " + std::to_string(net.input_dim()) + " and output width " +
                          std::to_string(d) + " cannot be a generator");
    return {std::move(net), d, dz};
}

CriticX0 CriticX0::create(int feature_dim, int semantic_dim, Rng& rng) {
    return {nn::DenseNet::he_normal(three_layer(feature_dim + semantic_dim, 4 * feature_dim, 1), rng), feature_dim,
            semantic_dim};
}

CriticXt CriticXt::create(int feature_dim, int semantic_dim, Rng& rng) {
    const int in = 2 * feature_dim + semantic_dim + kTimeEmbedDim;
    return {nn::DenseNet::he_normal(three_layer(in, 4 * feature_dim, 1), rng), feature_dim, semantic_dim};
}

Matrix synthesize(const Generator& gen, const Matrix& z, const Matrix& x_noisy, std::span<const int> t_cond,
                  const Matrix& eps) {
    const Eigen::Index b = z.rows();
    require_rows(x_noisy, b, "synthesize");
    require_rows(eps, b, "synthesize");
    if (static_cast<Eigen::Index>(t_cond.size()) != b) throw ConfigError("synthesize: timestep count mismatch");
    if (z.cols() != gen.semantic_dim || x_noisy.cols() != gen.feature_dim || eps.cols() != gen.feature_dim)
        throw ConfigError("synthesize: input widths do not match the generator layout");
    Matrix in(b, gen.net.input_dim());
    in << eps, z, x_noisy, timestep_embedding(t_cond);
    return gen.net.forward(in);
}

Vector synthesize(const Generator& gen, const Vector& z, const Vector& x_noisy, int t_cond, const Vector& eps) {
    const int t[1] = {t_cond};
    return synthesize(gen, z.transpose(), x_noisy.transpose(), t, eps.transpose()).row(0).transpose();
}

TransitionBatch sample_transitions(const Matrix& x0, const Matrix& z, std::vector<int> labels,
                                   const diffusion::Schedule& sched, Rng& rng) {
    const Eigen::Index b = x0.rows();
    require_rows(z, b, "sample_transitions");
    TransitionBatch out;
    out.x0 = x0;
    out.z = z;
    out.labels = std::move(labels);
    std::uniform_int_distribution<int> pick_t(0, sched.steps() - 1);
    out.t.resize(static_cast<std::size_t>(b));
    for (int& t : out.t) t = pick_t(rng);
    out.xt = diffusion::forward_noise(x0, out.t, sched, standard_normal(b, x0.cols(), rng));
    out.x_next = diffusion::forward_step(out.xt, out.t, sched, standard_normal(b, x0.cols(), rng));
    out.gen_noise = standard_normal(b, x0.cols(), rng);
    out.post_noise = standard_normal(b, x0.cols(), rng);
    return out;
}

SynthesisVars synthesize_on_tape(Tape& tape, const nn::BoundNet& gen, const TransitionBatch& batch,
                                 const diffusion::Schedule& sched) {
    const Eigen::Index b = batch.size();
    require_nonempty(b, "synthesize");
    const std::vector<int> t_next = shifted(batch.t, 1);
    Var input = nn::hconcat({tape.constant(batch.gen_noise), tape.constant(batch.z), tape.constant(batch.x_next),
                             tape.constant(timestep_embedding(t_next))});
    Var x0_hat = nn::forward(gen, input).output;

    Vector c_x0(b), c_next(b), sigma(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto p = sched.posterior(batch.t[i]);
        c_x0(i) = p.c_x0;
        c_next(i) = p.c_next;
        sigma(i) = std::sqrt(p.var);
    }
    Matrix fixed = c_next.asDiagonal() * batch.x_next + sigma.asDiagonal() * batch.post_noise;
    Var xt_hat = nn::add(nn::scale_rows(x0_hat, c_x0), tape.constant(std::move(fixed)));
    return {x0_hat, xt_hat};
}

Var critic_x0_loss_on_tape(Tape& tape, const nn::BoundNet& critic, const Matrix& real, Var fake, const Matrix& z,
                           const Vector& u, const GpConfig& gp) {
    require_nonempty(real.rows(), "critic_x0_loss");
    require_rows(fake.value(), real.rows(), "critic_x0_loss");
    require_rows(z, real.rows(), "critic_x0_loss");
    Var zc = tape.constant(z);
    Var d_real = nn::forward(critic, nn::hconcat({tape.constant(real), zc})).output;
    Var d_fake = nn::forward(critic, nn::hconcat({fake, zc})).output;
    Var w = nn::sub(nn::mean(d_fake), nn::mean(d_real));
    Var mixed = interpolate(tape, real, fake.value(), u);
    Var gp_term = penalty(critic, nn::hconcat({mixed, zc}), 0, real.cols());
    return nn::add(w, nn::scale(gp_term, gp.lambda_gp));
}

Var critic_xt_loss_on_tape(Tape& tape, const nn::BoundNet& critic, const Matrix& real_xt, const Matrix& x_next,
                           Var fake_xt, const Matrix& z, std::span<const int> t, const Vector& u, const GpConfig& gp) {
    const Eigen::Index b = real_xt.rows();
    require_nonempty(b, "critic_xt_loss");
    require_rows(x_next, b, "critic_xt_loss");
    require_rows(fake_xt.value(), b, "critic_xt_loss");
    require_rows(z, b, "critic_xt_loss");
    if (static_cast<Eigen::Index>(t.size()) != b) throw ConfigError("critic_xt_loss: timestep count mismatch");
    Var rest = nn::hconcat({tape.constant(x_next), tape.constant(z), tape.constant(timestep_embedding(t))});
    Var d_real = nn::forward(critic, nn::hconcat({tape.constant(real_xt), rest})).output;
    Var d_fake = nn::forward(critic, nn::hconcat({fake_xt, rest})).output;
    Var w = nn::sub(nn::mean(d_fake), nn::mean(d_real));
    Var mixed = interpolate(tape, real_xt, fake_xt.value(), u);
    Var gp_term = penalty(critic, nn::hconcat({mixed, rest}), 0, real_xt.cols());
    return nn::add(w, nn::scale(gp_term, gp.lambda_gp));
}

Var generator_adv_loss_on_tape(Tape& tape, const SynthesisVars& fake, const nn::BoundNet& critic_x0,
                               const nn::BoundNet& critic_xt, const TransitionBatch& batch) {
    Var zc = tape.constant(batch.z);
    Var d0 = nn::forward(critic_x0, nn::hconcat({fake.x0_hat, zc})).output;
    Var dt = nn::forward(critic_xt, nn::hconcat({fake.xt_hat, tape.constant(batch.x_next), zc,
                                                 tape.constant(timestep_embedding(batch.t))}))
                 .output;
    return nn::scale(nn::add(nn::mean(d0), nn::mean(dt)), -1.0);
}

double gradient_penalty_x0(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                           const Vector& u) {
    Tape tape;
    nn::BoundNet c = nn::bind(tape, critic.net, false);
    Var mixed = interpolate(tape, real, fake, u);
    return penalty(c, nn::hconcat({mixed, tape.constant(z)}), 0, real.cols()).value()(0, 0);
}

nn::LossAndGrad critic_x0_loss(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                               const Vector& u, const GpConfig& gp) {
    Tape tape;
    nn::BoundNet c = nn::bind(tape, critic.net, true);
    Var loss = critic_x0_loss_on_tape(tape, c, real, tape.constant(fake), z, u, gp);
    tape.backward(loss);
    return {loss.value()(0, 0), c.gradients(tape)};
}

nn::LossAndGrad critic_x0_loss(const CriticX0& critic, const Matrix& real, const Matrix& fake, const Matrix& z,
                               const GpConfig& gp, Rng& rng) {
    return critic_x0_loss(critic, real, fake, z, uniform01(real.rows(), rng), gp);
}

nn::LossAndGrad critic_xt_loss(const CriticXt& critic, const Matrix& real_xt, const Matrix& x_next,
                               const Matrix& fake_xt, const Matrix& z, std::span<const int> t, const Vector& u,
                               const GpConfig& gp) {
    Tape tape;
    nn::BoundNet c = nn::bind(tape, critic.net, true);
    Var loss = critic_xt_loss_on_tape(tape, c, real_xt, x_next, tape.constant(fake_xt), z, t, u, gp);
    tape.backward(loss);
    return {loss.value()(0, 0), c.gradients(tape)};
}

nn::LossAndGrad critic_xt_loss(const CriticXt& critic, const Matrix& real_xt, const Matrix& x_next,
                               const Matrix& fake_xt, const Matrix& z, std::span<const int> t, const GpConfig& gp,
                               Rng& rng) {
    return critic_xt_loss(critic, real_xt, x_next, fake_xt, z, t, uniform01(real_xt.rows(), rng), gp);
}

CriticLoss total_critic_loss(const CriticX0& cx0, const CriticXt& cxt, const Generator& gen,
                             const TransitionBatch& batch, const diffusion::Schedule& sched, const Vector& u_x0,
                             const Vector& u_xt, const GpConfig& gp) {
    Tape tape;
    nn::BoundNet g = nn::bind(tape, gen.net, false);
    nn::BoundNet c0 = nn::bind(tape, cx0.net, true);
    nn::BoundNet ct = nn::bind(tape, cxt.net, true);
    SynthesisVars fake = synthesize_on_tape(tape, g, batch, sched);
    Var l0 = critic_x0_loss_on_tape(tape, c0, batch.x0, fake.x0_hat, batch.z, u_x0, gp);
    Var lt = critic_xt_loss_on_tape(tape, ct, batch.xt, batch.x_next, fake.xt_hat, batch.z, batch.t, u_xt, gp);
    Var total = nn::add(l0, lt);
    tape.backward(total);
    return {total.value()(0, 0), c0.gradients(tape), ct.gradients(tape)};
}

nn::LossAndGrad generator_adv_loss(const Generator& gen, const CriticX0& cx0, const CriticXt& cxt,
                                   const TransitionBatch& batch, const diffusion::Schedule& sched) {
    Tape tape;
    nn::BoundNet g = nn::bind(tape, gen.net, true);
    nn::BoundNet c0 = nn::bind(tape, cx0.net, false);
    nn::BoundNet ct = nn::bind(tape, cxt.net, false);
    SynthesisVars fake = synthesize_on_tape(tape, g, batch, sched);
    Var loss = generator_adv_loss_on_tape(tape, fake, c0, ct, batch);
    tape.backward(loss);
    return {loss.value()(0, 0), g.gradients(tape)};
}

}  // namespace rlvc::gan
