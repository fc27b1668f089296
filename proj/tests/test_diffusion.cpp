#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rlvc/diffusion.hpp"
#include "rlvc/errors.hpp"

using namespace rlvc;
using namespace rlvc::diffusion;

TEST_CASE("single-step schedule") {
    const auto s = Schedule::linear(1, 0.1, 0.1);
    CHECK(s.steps() == 1);
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("alpha_bar is the running product of 1 - beta") {
    const auto s = Schedule::from_betas({0.1, 0.2});
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(std::abs(s.alpha_bar(1) - 0.9) < 1e-15);
    CHECK(std::abs(s.alpha_bar(2) - 0.72) < 1e-15);
    CHECK(s.alpha(2) == doctest::Approx(0.8));
}

TEST_CASE("linear schedule endpoints") {
    const auto s = Schedule::linear(4, 0.1, 0.4);
    CHECK(s.beta(1) == doctest::Approx(0.1));
    CHECK(s.beta(2) == doctest::Approx(0.2));
    CHECK(s.beta(3) == doctest::Approx(0.3));
    CHECK(s.beta(4) == doctest::Approx(0.4));
    CHECK(s.alpha_bar(4) == doctest::Approx(0.9 * 0.8 * 0.7 * 0.6));
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS(Schedule::from_betas({}));
    CHECK_THROWS(Schedule::from_betas({0.1, 1.0}));
    CHECK_THROWS(Schedule::from_betas({0.0}));
    CHECK_THROWS(Schedule::linear(0, 0.1, 0.2));
}

TEST_CASE("random schedules: monotone alpha_bar and a consistent posterior") {
    Rng rng(99);
    std::uniform_real_distribution<double> ub(1e-3, 0.99);
    std::uniform_int_distribution<int> ut(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> betas(static_cast<std::size_t>(ut(rng)));
        for (auto& b : betas) b = ub(rng);
        const auto s = Schedule::from_betas(betas);
        for (int t = 1; t <= s.steps(); ++t) {
            CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
            CHECK(s.alpha_bar(t) > 0.0);
        }
        for (int t = 0; t < s.steps(); ++t) {
            const auto p = s.posterior(t);
            // Gaussian conditioning of x_t on x_{t+1}, both given x0:
            // cov = sqrt(alpha_{t+1}) (1 - ab_t), var(x_{t+1}) = 1 - ab_{t+1}
            const double ab_t = s.alpha_bar(t), ab_n = s.alpha_bar(t + 1), a = s.alpha(t + 1);
            const double k = std::sqrt(a) * (1.0 - ab_t) / (1.0 - ab_n);
            CHECK(p.c_next == doctest::Approx(k).epsilon(1e-12));
            CHECK(p.c_x0 == doctest::Approx(std::sqrt(ab_t) - k * std::sqrt(a) * std::sqrt(ab_t)).epsilon(1e-10));
            CHECK(p.var == doctest::Approx((1.0 - ab_t) - k * std::sqrt(a) * (1.0 - ab_t)).epsilon(1e-10));
            CHECK(std::abs(p.c_x0 + p.c_next * std::sqrt(ab_n) - std::sqrt(ab_t)) < 1e-10);
            CHECK(p.var >= 0.0);
        }
        CHECK(s.posterior(0).var == doctest::Approx(0.0));
    }
}

TEST_CASE("forward noise at t = 0 is the identity") {
    Rng rng(1);
    const auto s = Schedule::linear(4, 0.1, 0.4);
    Eigen::VectorXd x0(3);
    x0 << 1.0, -2.0, 0.5;
    CHECK(forward_noise(x0, 0, s, rng) == x0);
}

TEST_CASE("forward noise has the scheduled variance") {
    Rng rng(2);
    const auto s = Schedule::linear(4, 0.1, 0.4);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.7);
    const int n = 100000;
    for (int t = 1; t <= 4; ++t) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = forward_noise(x0, t, s, rng)(0);
            sum += v;
            sq += v * v;
        }
        const double mean = sum / n, var = sq / n - mean * mean;
        CHECK(std::abs(var / (1.0 - s.alpha_bar(t)) - 1.0) < 0.02);
        CHECK(mean == doctest::Approx(0.7 * std::sqrt(s.alpha_bar(t))).epsilon(0.02));
    }
}

TEST_CASE("batched forward noise and step use the given noise") {
    Rng rng(3);
    const auto s = Schedule::linear(4, 0.1, 0.4);
    const auto x = rlvc::test::randn(3, 2, rng), e = rlvc::test::randn(3, 2, rng);
    const std::vector<int> t{0, 2, 4};
    const auto y = forward_noise(x, t, s, e);
    for (int i = 0; i < 3; ++i) {
        const double ab = s.alpha_bar(t[static_cast<std::size_t>(i)]);
        CHECK((y.row(i) - (std::sqrt(ab) * x.row(i) + std::sqrt(1 - ab) * e.row(i))).norm() < 1e-14);
    }
    const std::vector<int> ts{0, 1, 3};
    const auto z = forward_step(x, ts, s, e);
    for (int i = 0; i < 3; ++i) {
        const int tn = ts[static_cast<std::size_t>(i)] + 1;
        CHECK((z.row(i) - (std::sqrt(s.alpha(tn)) * x.row(i) + std::sqrt(s.beta(tn)) * e.row(i))).norm() < 1e-14);
    }
}

TEST_CASE("posterior at t = 0 returns the clean estimate") {
    Rng rng(4);
    const auto s = Schedule::linear(4, 0.1, 0.4);
    Eigen::VectorXd x0(2), xn(2);
    x0 << 0.3, -1.2;
    xn << 5.0, 7.0;
    const auto a = posterior_sample(x0, xn, 0, s, rng);
    const auto b = posterior_sample(x0, xn, 0, s, rng);
    CHECK(a == b);
    CHECK((a - x0).norm() < 1e-12);
}

TEST_CASE("posterior samples have the scheduled variance") {
    Rng rng(5);
    const auto s = Schedule::linear(4, 0.1, 0.4);
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0), xn = Eigen::VectorXd::Constant(1, -0.5);
    const int n = 100000;
    for (int t = 1; t < 4; ++t) {
        const auto p = s.posterior(t);
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = posterior_sample(x0, xn, t, s, rng)(0);
            sum += v;
            sq += v * v;
        }
        const double mean = sum / n, var = sq / n - mean * mean;
        CHECK(std::abs(var / p.var - 1.0) < 0.02);
        CHECK(std::abs(mean - (p.c_x0 - 0.5 * p.c_next)) < 0.01);
    }
}
