#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "rlvc/data.hpp"
#include "rlvc/nn.hpp"
#include "rlvc/rng.hpp"

namespace rlvc::test {

using nn::Matrix;
using nn::Vector;

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("rlvc-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline Matrix randn(Eigen::Index r, Eigen::Index c, Rng& rng) { return standard_normal(r, c, rng); }

inline std::vector<int> random_labels(std::size_t n, int classes, Rng& rng) {
    std::uniform_int_distribution<int> u(0, classes - 1);
    std::vector<int> out(n);
    for (auto& y : out) y = u(rng);
    return out;
}

// Evaluates `build` on a fresh tape with every entry of `params` as a
// variable and returns the loss with its gradients, for finite_difference_check.
inline nn::LossAndGrad tape_loss(std::vector<Matrix*> params,
                                 const std::function<nn::Var(nn::Tape&, std::vector<nn::Var>&)>& build) {
    nn::Tape tape;
    std::vector<nn::Var> vars;
    for (Matrix* p : params) vars.push_back(tape.variable(*p));
    nn::Var loss = build(tape, vars);
    tape.backward(loss);
    nn::LossAndGrad out{loss.value()(0, 0), {}};
    for (auto v : vars) out.grads.push_back(tape.grad(v));
    return out;
}

// 2 seen classes, 1 unseen, 6 samples, d = 3, d_z = 2.
inline data::ZslDataset tiny_dataset() {
    data::ZslDataset ds;
    ds.features.resize(6, 3);
    ds.features << 1.0, 0.5, -0.25,
                   1.5, 0.0, 0.75,
                   -2.0, 1.0, 0.5,
                   -1.5, 1.25, 0.0,
                   0.25, -3.0, 2.0,
                   0.5, -2.5, 1.5;
    ds.labels = {0, 0, 1, 1, 2, 0};
    ds.splits = {data::Split::Train, data::Split::Train, data::Split::Train, data::Split::TestSeen,
                 data::Split::TestUnseen, data::Split::TestSeen};
    ds.roles = {data::Role::Seen, data::Role::Seen, data::Role::Unseen};
    ds.prototypes.resize(3, 2);
    ds.prototypes << 1.0, 0.0, 0.0, 1.0, 0.7, 0.7;
    return ds;
}

inline data::SyntheticSpec small_spec(std::uint64_t seed = 1) {
    data::SyntheticSpec s;
    s.n_seen = 10;
    s.n_unseen = 2;
    s.d = 16;
    s.d_z = 8;
    s.samples_per_class = 20;
    s.seed = seed;
    return s;
}

}  // namespace rlvc::test
