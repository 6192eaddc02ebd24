#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cofrnet/core.hpp"

namespace cofrnet {

class TrainingError : public Error {
public:
    using Error::Error;
};

enum class Loss { SquaredError, SoftmaxCrossEntropy };

struct TrainConfig {
    Loss loss = Loss::SquaredError;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;  // decoupled; applied to all parameters
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 20;       // epochs without validation improvement
    double dropout = 0.0;    // whole-ladder dropout probability
    std::uint64_t seed = 0;
    double epsilon = 0.1;    // written into the trained model

    void validate() const;
};

/// Gradients shaped exactly like the model parameters, plus the input
/// gradient (handy for cross-checking against the continuant formula).
struct GradientBundle {
    std::vector<Matrix> ladder_weights;  // one per ladder, (depth+1) x (p+1)
    Matrix mixing;
    std::vector<double> output_bias;
    std::vector<double> input;  // dL/dx, length p
};

/// One forward pass with everything backward() needs.
struct ForwardCache {
    std::vector<double> ladder_values;
    std::vector<LayerTrace> traces;
    std::vector<double> output;
};

ForwardCache model_forward(const CoFrNetModel& model, std::span<const double> x);

/// Reverse-mode gradients of the clamped network for one example;
/// `upstream` is dL/d(output). The cache must come from model_forward on the
/// same (model, x); a trace of the wrong shape raises TrainingError.
GradientBundle backward(const CoFrNetModel& model, std::span<const double> x,
                        std::span<const double> upstream, const ForwardCache& cache);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;    // NaN when no validation set
    double val_metric = 0.0;  // accuracy for classification, MSE otherwise
};

struct TrainResult {
    CoFrNetModel model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

/// Mini-batch Adam with decoupled weight decay, whole-ladder dropout and
/// early stopping on the validation loss (training loss when `x_val` is
/// empty). The best-validation parameters are restored at the end.
///
/// For regression `y` is N x q of targets; for softmax cross-entropy it is
/// N x 1 holding class indices. Throws TrainingError with the first
/// non-finite tensor named when the loss diverges.
TrainResult train(CoFrNetModel model, const Matrix& x, const Matrix& y,
                  const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg);

/// Builds a randomly initialized model. Depths:
///   f  - one entry per full ladder,
///   d  - one entry per feature (or a single entry broadcast to all),
///   dl - entries for the singleton ladders as for d; `full_ladders` extra
///        full ladders of depth 2, 3, ...
/// Denominator rungs get a +1 bias offset so no rung starts clamped; weights
/// are uniform in (-0.5/sqrt(p), +0.5/sqrt(p)). Same seed, same model.
CoFrNetModel init_model(Variant variant, int p, int q, std::vector<int> depths,
                        int full_ladders, std::uint64_t seed);

void write_history_csv(const std::string& path, std::span<const EpochStats> history);

// Flat parameter order: ladder weights (row-major, ladder by ladder), then
// mixing (row-major), then output bias. Shared by the optimizer and the
// finite-difference checks.
std::vector<double> flatten_params(const CoFrNetModel& model);
void unflatten_params(CoFrNetModel& model, std::span<const double> flat);
std::vector<double> flatten_grads(const GradientBundle& g);

/// Adam with decoupled weight decay over a flat parameter vector.
class AdamState {
public:
    explicit AdamState(size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads,
              double learning_rate, double weight_decay);

private:
    std::vector<double> m_;
    std::vector<double> v_;
    long t_ = 0;
};

}  // namespace cofrnet
