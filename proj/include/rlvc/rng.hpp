#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace rlvc {

using Rng = std::mt19937_64;

/// Derives an independent stream from a root seed and a stream name, so that
/// e.g. the "data" stream is unaffected by how much the "train" stream draws.
inline Rng make_stream(std::uint64_t root_seed, std::string_view name) {
    // FNV-1a over the name, then splitmix64 to mix with the seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::uint64_t z = root_seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return Rng(z);
}

inline Rng make_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
    Rng base = make_stream(root_seed, name);
    return make_stream(base() ^ (index * 0x9e3779b97f4a7c15ULL), name);
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    // Fill row-major so the draw order does not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

inline Eigen::VectorXd uniform01(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

}  // namespace rlvc
