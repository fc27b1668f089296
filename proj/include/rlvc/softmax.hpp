#pragma once

#include <span>

#include "rlvc/nn.hpp"

namespace rlvc::softmax {

using nn::Matrix;

struct FitConfig {
    int epochs = 50;
    double learning_rate = 1e-3;
    int batch_size = 128;
};

/// Linear softmax classifier (a one-layer DenseNet d -> num_classes) trained
/// from zero initialization by minibatch Adam on mean cross-entropy.
/// Labels are row indices in [0, num_classes).
nn::DenseNet fit(const Matrix& features, std::span<const int> labels, int num_classes, const FitConfig& config,
                 Rng& rng);

double mean_cross_entropy(const nn::DenseNet& head, const Matrix& features, std::span<const int> labels);
std::vector<int> predict(const nn::DenseNet& head, const Matrix& features);

}  // namespace rlvc::softmax
