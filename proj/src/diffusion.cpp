#include "rlvc/diffusion.hpp"

#include <cmath>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::diffusion {

Schedule Schedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw ConfigError("diffusion schedule needs T >= 1");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
        throw ConfigError("diffusion schedule needs 0 < beta_min <= beta_max < 1");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        betas[i] = steps == 1 ? beta_min : beta_min + (beta_max - beta_min) * i / static_cast<double>(steps - 1);
    return from_betas(std::move(betas));
}

Schedule Schedule::from_betas(std::vector<double> betas) {
    if (betas.empty()) throw ConfigError("diffusion schedule needs T >= 1");
    Schedule s;
    s.alpha_bar_.push_back(1.0);
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) throw ConfigError("every beta must lie in (0, 1)");
        s.alpha_bar_.push_back(s.alpha_bar_.back() * (1.0 - b));
    }
    s.beta_ = std::move(betas);
    return s;
}

double Schedule::beta(int t) const {
    if (t < 1 || t > steps()) throw UsageError("beta(t) needs 1 <= t <= T, got " + std::to_string(t));
    return beta_[t - 1];
}

double Schedule::alpha(int t) const { return 1.0 - beta(t); }

double Schedule::alpha_bar(int t) const {
    if (t < 0 || t > steps()) throw UsageError("alpha_bar(t) needs 0 <= t <= T, got " + std::to_string(t));
    return alpha_bar_[t];
}

Schedule::Posterior Schedule::posterior(int t) const {
    if (t < 0 || t >= steps())
        throw UsageError("posterior needs 0 <= t <= T-1 (no state beyond T), got " + std::to_string(t));
    const double ab_t = alpha_bar_[t];
    const double ab_next = alpha_bar_[t + 1];
    const double b_next = beta_[t];
    const double denom = 1.0 - ab_next;
    return {std::sqrt(ab_t) * b_next / denom, std::sqrt(1.0 - b_next) * (1.0 - ab_t) / denom,
            b_next * (1.0 - ab_t) / denom};
}

VectorXd forward_noise(const VectorXd& x0, int t, const Schedule& sched, Rng& rng) {
    const double ab = sched.alpha_bar(t);
    const MatrixXd eps = standard_normal(x0.size(), 1, rng);
    if (t == 0) return x0;
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps.col(0);
}

MatrixXd forward_noise(const MatrixXd& x0, std::span<const int> t, const Schedule& sched, const MatrixXd& noise) {
    if (static_cast<Eigen::Index>(t.size()) != x0.rows() || noise.rows() != x0.rows() || noise.cols() != x0.cols())
        throw ConfigError("forward_noise: shape mismatch");
    MatrixXd out(x0.rows(), x0.cols());
    for (Eigen::Index i = 0; i < x0.rows(); ++i) {
        const double ab = sched.alpha_bar(t[i]);
        out.row(i) = std::sqrt(ab) * x0.row(i) + std::sqrt(1.0 - ab) * noise.row(i);
    }
    return out;
}

MatrixXd forward_step(const MatrixXd& xt, std::span<const int> t, const Schedule& sched, const MatrixXd& noise) {
    if (static_cast<Eigen::Index>(t.size()) != xt.rows() || noise.rows() != xt.rows() || noise.cols() != xt.cols())
        throw ConfigError("forward_step: shape mismatch");
    MatrixXd out(xt.rows(), xt.cols());
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        const int next = t[i] + 1;
        out.row(i) = std::sqrt(sched.alpha(next)) * xt.row(i) + std::sqrt(sched.beta(next)) * noise.row(i);
    }
    return out;
}

VectorXd posterior_sample(const VectorXd& x0_hat, const VectorXd& x_next, int t, const Schedule& sched, Rng& rng) {
    if (x0_hat.size() != x_next.size()) throw ConfigError("posterior_sample: dimension mismatch");
    const auto p = sched.posterior(t);
    const MatrixXd eps = standard_normal(x0_hat.size(), 1, rng);
    VectorXd mean = p.c_x0 * x0_hat + p.c_next * x_next;
    if (p.var == 0.0) return mean;
    return mean + std::sqrt(p.var) * eps.col(0);
}

}  // namespace rlvc::diffusion
