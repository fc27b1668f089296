#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rlvc/rng.hpp"

namespace rlvc::diffusion {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Variance-preserving schedule. Index 0 is clean data, larger t is noisier.
/// beta(t) and alpha(t) are defined for t in [1, T]; alpha_bar(t) for
/// t in [0, T] with alpha_bar(0) = 1.
class Schedule {
public:
    /// beta linearly spaced from beta_min to beta_max over T steps.
    static Schedule linear(int steps, double beta_min, double beta_max);
    static Schedule from_betas(std::vector<double> betas);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;

    /// Coefficients of the Gaussian posterior q(x_t | x_0, x_{t+1}) for t in [0, T-1]:
    /// mean = c_x0 * x0 + c_next * x_next, variance = var.
    struct Posterior {
        double c_x0;
        double c_next;
        double var;
    };
    Posterior posterior(int t) const;

private:
    std::vector<double> beta_;       // beta_[t-1] = beta_t
    std::vector<double> alpha_bar_;  // alpha_bar_[t], size T+1
};

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, eps ~ N(0, I).
VectorXd forward_noise(const VectorXd& x0, int t, const Schedule& sched, Rng& rng);

/// Row-wise forward noising with per-row timesteps and explicit noise.
MatrixXd forward_noise(const MatrixXd& x0, std::span<const int> t, const Schedule& sched, const MatrixXd& noise);

/// One forward step x_{t+1} = sqrt(alpha_{t+1}) x_t + sqrt(beta_{t+1}) eps, row-wise.
MatrixXd forward_step(const MatrixXd& xt, std::span<const int> t, const Schedule& sched, const MatrixXd& noise);

/// Draw from q(x_t | x0_hat, x_next). At t = 0 the variance is zero and the
/// result is deterministic.
VectorXd posterior_sample(const VectorXd& x0_hat, const VectorXd& x_next, int t, const Schedule& sched, Rng& rng);

}  // namespace rlvc::diffusion
