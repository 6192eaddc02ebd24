#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cofrnet/core.hpp"

namespace cofrnet {

/// Small fully connected net with tanh hidden activations and a linear output
/// layer: depth d means d weight matrices (d-1 hidden layers of `width`).
/// Only used as the parameter-matched baseline in the synthetic benchmark.
struct MlpBaseline {
    struct Layer {
        Matrix w;  // out x in
        std::vector<double> b;
    };

    int input_dim = 0;
    int output_dim = 0;
    int depth = 0;
    int width = 0;
    std::vector<Layer> layers;

    /// pW + (d-2)W^2 + Wq: the bias-free weight count used for matching.
    long weight_count_formula() const;

    std::vector<double> forward(std::span<const double> x) const;
};

MlpBaseline init_mlp(int p, int q, int depth, int width, std::uint64_t seed);

struct MlpTrainConfig {
    double learning_rate = 1e-2;
    double weight_decay = 0.0;
    int batch_size = 64;
    int max_epochs = 2000;
    std::uint64_t seed = 0;
};

/// Mini-batch Adam on mean squared error; returns the final training MSE.
double train_mlp(MlpBaseline& mlp, const Matrix& x, const Matrix& y,
                 const MlpTrainConfig& cfg);

}  // namespace cofrnet
