#include "rlvc/softmax.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::softmax {

namespace {

void validate(const Matrix& features, std::span<const int> labels, int num_classes) {
    if (num_classes < 1) throw ConfigError("classifier needs at least one class");
    if (static_cast<Eigen::Index>(labels.size()) != features.rows())
        throw ConfigError("classifier: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(features.rows()) + " rows");
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw ConfigError("classifier: label " + std::to_string(y) + " out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    for (int c = 0; c < num_classes; ++c)
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw ConfigError("classifier: class index " + std::to_string(c) + " has no samples");
}

}  // namespace

nn::DenseNet fit(const Matrix& features, std::span<const int> labels, int num_classes, const FitConfig& config,
                 Rng& rng) {
    validate(features, labels, num_classes);
    if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0))
        throw ConfigError("classifier: invalid training configuration");
    nn::DenseNet head({static_cast<int>(features.cols()), num_classes});
    nn::AdamState adam(nn::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    const auto n = static_cast<std::size_t>(features.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            Matrix x(static_cast<Eigen::Index>(stop - start), features.cols());
            std::vector<int> y(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                x.row(static_cast<Eigen::Index>(i - start)) = features.row(static_cast<Eigen::Index>(order[i]));
                y[i - start] = labels[order[i]];
            }
            nn::Tape tape;
            nn::BoundNet b = nn::bind(tape, head, true);
            nn::Var logp = nn::pick(nn::log_softmax_rows(nn::forward(b, tape.constant(std::move(x))).output), y);
            nn::Var loss = nn::scale(nn::mean(logp), -1.0);
            tape.backward(loss);
            const auto grads = b.gradients(tape);
            nn::adam_step(head.parameters(), grads, adam);
        }
    }
    head.check_finite();
    return head;
}

double mean_cross_entropy(const nn::DenseNet& head, const Matrix& features, std::span<const int> labels) {
    nn::Tape tape;
    nn::BoundNet b = nn::bind(tape, head, false);
    nn::Var logp = nn::pick(nn::log_softmax_rows(nn::forward(b, tape.constant(features)).output), labels);
    return -nn::mean(logp).value()(0, 0);
}

std::vector<int> predict(const nn::DenseNet& head, const Matrix& features) {
    const Matrix logits = head.forward(features);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace rlvc::softmax
