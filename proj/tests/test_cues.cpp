#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rlvc/cues.hpp"
#include "rlvc/errors.hpp"

using namespace rlvc;
using namespace rlvc::cues;
using rlvc::test::randn;

namespace {

VisualPrototypeTable table_of(std::initializer_list<std::pair<int, std::vector<double>>> rows) {
    VisualPrototypeTable t;
    for (const auto& [c, v] : rows) {
        t.prototypes[c] = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        t.counts[c] = 1;
    }
    return t;
}

Matrix row(std::vector<double> v) {
    Matrix m(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = v[j];
    return m;
}

}  // namespace

TEST_CASE("mined prototype is the class mean") {
    Matrix x(3, 2);
    x << 0.0, 1.0, 2.0, 3.0, 9.0, 9.0;
    const std::vector<int> y{0, 0, 1}, seen{0, 1};
    const auto t = mine_prototypes(x, y, seen);
    CHECK(t.at(0)(0) == 1.0);
    CHECK(t.at(0)(1) == 2.0);
    CHECK(t.counts.at(0) == 2);
    CHECK(t.at(1)(0) == 9.0);
}

TEST_CASE("mining agrees with a brute-force mean") {
    Rng rng(8);
    const Matrix x = randn(60, 4, rng);
    const auto y = rlvc::test::random_labels(60, 5, rng);
    const std::vector<int> seen{0, 1, 2, 3, 4};
    const auto t = mine_prototypes(x, y, seen);
    for (int c : seen) {
        Vector sum = Vector::Zero(4);
        int n = 0;
        for (int i = 0; i < 60; ++i)
            if (y[static_cast<std::size_t>(i)] == c) {
                sum += x.row(i).transpose();
                ++n;
            }
        CHECK((t.at(c) - sum / n).norm() < 1e-13);
    }
    const std::vector<int> c2{2, 0};
    const Matrix g = t.gather(c2);
    CHECK(g.row(0).transpose() == t.at(2));
    CHECK(g.row(1).transpose() == t.at(0));
}

TEST_CASE("mining rejects missing classes and zero means") {
    Matrix x(2, 2);
    x << 1.0, 1.0, -1.0, -1.0;
    const std::vector<int> y{0, 0}, seen{0}, seen2{0, 1};
    CHECK_THROWS_AS(mine_prototypes(x, y, seen), NumericError);
    const std::vector<int> y2{0, 0};
    Matrix x2 = Matrix::Ones(2, 2);
    CHECK_THROWS_AS(mine_prototypes(x2, y2, seen2), ConfigError);
    CHECK_THROWS_AS(table_of({{0, {1.0}}}).at(3), ConfigError);
}

TEST_CASE("cosine distillation exact cases") {
    const auto t = table_of({{0, {1.0, 0.0}}});
    const std::vector<int> y{0};
    CHECK(std::abs(pd_loss(row({3.0, 0.0}), y, t).value) < 1e-12);
    CHECK(std::abs(pd_loss(row({0.0, -2.0}), y, t).value - 1.0) < 1e-12);
    CHECK(std::abs(pd_loss(row({-0.5, 0.0}), y, t).value - 2.0) < 1e-12);
    // zero row contributes 1
    CHECK(pd_loss(row({0.0, 0.0}), y, t).value == 1.0);
    CHECK(pd_loss(row({0.0, 0.0}), y, t).grad.isZero(0.0));
}

TEST_CASE("cosine distillation: range and positive-scale invariance") {
    Rng rng(9);
    std::uniform_real_distribution<double> us(0.01, 100.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Matrix v = randn(1, 5, rng);
        VisualPrototypeTable t;
        t.prototypes[0] = v.row(0).transpose();
        const Matrix x = randn(3, 5, rng);
        const std::vector<int> y{0, 0, 0};
        const double l = pd_loss(x, y, t).value;
        CHECK(l >= 0.0);
        CHECK(l <= 2.0);
        CHECK(pd_loss(x * us(rng), y, t).value == doctest::Approx(l).epsilon(1e-12));
    }
}

TEST_CASE("KL variant exact value and nonnegativity") {
    const auto t = table_of({{0, {1.0, 0.0}}});
    const std::vector<int> y{0};
    // softmax([1,0]) vs softmax([0,1]): KL = (p - q) * 1 with p = e/(1+e)
    const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
    const double oracle = p * std::log(p / (1 - p)) + (1 - p) * std::log((1 - p) / p);
    CHECK(kl_variant_loss(row({0.0, 1.0}), y, t).value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(kl_variant_loss(row({0.0, 1.0}), y, t).value == doctest::Approx(0.46212).epsilon(1e-5));
    CHECK(std::abs(kl_variant_loss(row({1.0, 0.0}), y, t).value) < 1e-14);
    CHECK(std::abs(kl_variant_loss(row({4.0, 3.0}), y, t).value) < 1e-14);

    Rng rng(10);
    VisualPrototypeTable r;
    r.prototypes[0] = randn(6, 1, rng);
    const std::vector<int> yy(4, 0);
    for (int i = 0; i < 100; ++i) CHECK(kl_variant_loss(randn(4, 6, rng), yy, r).value >= -1e-15);
}

TEST_CASE("l1 variant value and symmetry") {
    const std::vector<int> y{0};
    CHECK(l1_variant_loss(row({1.0, 2.0}), y, table_of({{0, {3.0, 0.0}}})).value == 2.0);
    CHECK(l1_variant_loss(row({3.0, 0.0}), y, table_of({{0, {1.0, 2.0}}})).value == 2.0);
}

TEST_CASE("cue losses pass finite-difference checks") {
    Rng rng(11);
    VisualPrototypeTable t;
    for (int c = 0; c < 3; ++c) t.prototypes[c] = randn(4, 1, rng);
    const auto y = rlvc::test::random_labels(6, 3, rng);
    for (auto variant : {CueLoss::CosinePd, CueLoss::Kl, CueLoss::L1}) {
        CAPTURE(to_string(variant));
        Matrix x = randn(6, 4, rng);
        std::vector<Matrix*> params{&x};
        auto fn = [&] {
            return rlvc::test::tape_loss(params, [&](nn::Tape&, std::vector<nn::Var>& v) {
                return cue_loss_on_tape(variant, v[0], y, t);
            });
        };
        CHECK(nn::finite_difference_check(fn, params, 1e-6) < 1e-6);
    }
}

TEST_CASE("total generator loss is adv + lambda * cue") {
    CHECK(generator_total_loss(0.5, 1.0, CueConfig{5.0, CueLoss::CosinePd}) == 5.5);
    CHECK(generator_total_loss(0.5, 1.0, CueConfig{0.0, CueLoss::CosinePd}) == 0.5);
}

TEST_CASE("total loss gradient is linear in its parts") {
    Rng rng(12);
    VisualPrototypeTable t;
    t.prototypes[0] = randn(3, 1, rng);
    const std::vector<int> y{0, 0};
    const Matrix x0 = randn(2, 3, rng), w = randn(2, 3, rng);
    nn::Tape tape;
    auto x = tape.variable(x0);
    auto adv = nn::sum(nn::mul_const(x, w));
    auto total = generator_total_loss(adv, pd_loss_on_tape(x, y, t), CueConfig{2.5, CueLoss::CosinePd});
    tape.backward(total);
    const Matrix expected = w + 2.5 * pd_loss(x0, y, t).grad;
    CHECK((tape.grad(x) - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("cue loss names round trip") {
    for (auto v : {CueLoss::CosinePd, CueLoss::Kl, CueLoss::L1}) CHECK(parse_cue_loss(to_string(v)) == v);
    CHECK_THROWS_AS(parse_cue_loss("cosine2"), ConfigError);
}

TEST_CASE("prototype export format") {
    rlvc::test::TempDir dir("proto");
    const auto t = table_of({{0, {1.0, -0.5}}, {3, {0.25, 2.0}}});
    export_prototypes(t, dir / "p.txt");
    std::ifstream f(dir / "p.txt");
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == "0 1 -0.5\n3 0.25 2\n");
}
