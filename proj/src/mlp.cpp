#include "cofrnet/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cofrnet/training.hpp"

namespace cofrnet {

long MlpBaseline::weight_count_formula() const {
    return static_cast<long>(input_dim) * width +
           static_cast<long>(depth - 2) * width * width +
           static_cast<long>(width) * output_dim;
}

std::vector<double> MlpBaseline::forward(std::span<const double> x) const {
    std::vector<double> a(x.begin(), x.end());
    for (size_t li = 0; li < layers.size(); ++li) {
        const Layer& layer = layers[li];
        std::vector<double> z(layer.b);
        for (int r = 0; r < layer.w.rows(); ++r)
            for (int c = 0; c < layer.w.cols(); ++c) z[r] += layer.w(r, c) * a[c];
        if (li + 1 < layers.size())
            for (double& v : z) v = std::tanh(v);
        a = std::move(z);
    }
    return a;
}

MlpBaseline init_mlp(int p, int q, int depth, int width, std::uint64_t seed) {
    if (depth < 2) throw ConfigError("mlp depth must be at least 2");
    if (width < 1 || p < 1 || q < 1) throw ConfigError("mlp sizes must be positive");

    MlpBaseline mlp;
    mlp.input_dim = p;
    mlp.output_dim = q;
    mlp.depth = depth;
    mlp.width = width;

    std::mt19937_64 rng(seed);
    auto make_layer = [&](int out, int in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> unif(-scale, scale);
        MlpBaseline::Layer layer;
        layer.w = Matrix(out, in);
        for (double& v : layer.w.data()) v = unif(rng);
        layer.b.assign(out, 0.0);
        return layer;
    };

    mlp.layers.push_back(make_layer(width, p));
    for (int i = 0; i < depth - 2; ++i) mlp.layers.push_back(make_layer(width, width));
    mlp.layers.push_back(make_layer(q, width));
    return mlp;
}

namespace {

std::vector<double> flatten(const MlpBaseline& mlp) {
    std::vector<double> flat;
    for (const MlpBaseline::Layer& l : mlp.layers) {
        flat.insert(flat.end(), l.w.data().begin(), l.w.data().end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void unflatten(MlpBaseline& mlp, std::span<const double> flat) {
    size_t pos = 0;
    for (MlpBaseline::Layer& l : mlp.layers) {
        std::copy_n(flat.begin() + pos, l.w.data().size(), l.w.data().begin());
        pos += l.w.data().size();
        std::copy_n(flat.begin() + pos, l.b.size(), l.b.begin());
        pos += l.b.size();
    }
}

// dL/dparams for one example under squared error, reverse pass with cached
// activations.
void accumulate_grads(const MlpBaseline& mlp, std::span<const double> x,
                      std::span<const double> target, std::vector<double>& grad,
                      double& loss) {
    const size_t n_layers = mlp.layers.size();
    std::vector<std::vector<double>> acts;  // post-activation per layer input
    acts.reserve(n_layers + 1);
    acts.emplace_back(x.begin(), x.end());
    std::vector<std::vector<double>> pre(n_layers);

    for (size_t li = 0; li < n_layers; ++li) {
        const MlpBaseline::Layer& layer = mlp.layers[li];
        std::vector<double> z(layer.b);
        for (int r = 0; r < layer.w.rows(); ++r)
            for (int c = 0; c < layer.w.cols(); ++c)
                z[r] += layer.w(r, c) * acts[li][c];
        pre[li] = z;
        if (li + 1 < n_layers)
            for (double& v : z) v = std::tanh(v);
        acts.push_back(std::move(z));
    }

    std::vector<double> delta(mlp.output_dim);
    for (int j = 0; j < mlp.output_dim; ++j) {
        const double diff = acts.back()[j] - target[j];
        loss += diff * diff;
        delta[j] = 2.0 * diff;
    }

    // walk the flat layout backwards: per layer [weights..., biases...]
    std::vector<size_t> offsets(n_layers);
    size_t pos = 0;
    for (size_t li = 0; li < n_layers; ++li) {
        offsets[li] = pos;
        pos += mlp.layers[li].w.data().size() + mlp.layers[li].b.size();
    }

    for (size_t li = n_layers; li-- > 0;) {
        const MlpBaseline::Layer& layer = mlp.layers[li];
        const size_t wbase = offsets[li];
        const size_t bbase = wbase + layer.w.data().size();
        for (int r = 0; r < layer.w.rows(); ++r) {
            grad[bbase + r] += delta[r];
            for (int c = 0; c < layer.w.cols(); ++c)
                grad[wbase + static_cast<size_t>(r) * layer.w.cols() + c] +=
                    delta[r] * acts[li][c];
        }
        if (li > 0) {
            std::vector<double> prev(layer.w.cols(), 0.0);
            for (int c = 0; c < layer.w.cols(); ++c)
                for (int r = 0; r < layer.w.rows(); ++r)
                    prev[c] += layer.w(r, c) * delta[r];
            // tanh'(z) = 1 - tanh(z)^2, and acts[li] holds tanh(pre)
            for (int c = 0; c < layer.w.cols(); ++c)
                prev[c] *= 1.0 - acts[li][c] * acts[li][c];
            delta = std::move(prev);
        }
    }
}

}  // namespace

double train_mlp(MlpBaseline& mlp, const Matrix& x, const Matrix& y,
                 const MlpTrainConfig& cfg) {
    if (x.rows() < 1) throw TrainingError("mlp training set is empty");
    if (x.cols() != mlp.input_dim || y.cols() != mlp.output_dim)
        throw DimensionError("mlp training data shape mismatch");

    std::mt19937_64 rng(cfg.seed);
    std::vector<double> params = flatten(mlp);
    AdamState adam(params.size());

    std::vector<int> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> row(x.cols());
    std::vector<double> target(y.cols());
    std::vector<double> grad(params.size());

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int start = 0; start < x.rows(); start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, x.rows());
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (int bi = start; bi < end; ++bi) {
                const int i = order[bi];
                for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);
                for (int j = 0; j < y.cols(); ++j) target[j] = y(i, j);
                accumulate_grads(mlp, row, target, grad, batch_loss);
            }
            const int n = end - start;
            for (double& v : grad) v /= n;
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite mlp loss at epoch " + std::to_string(epoch));
            adam.step(params, grad, cfg.learning_rate, cfg.weight_decay);
            unflatten(mlp, params);
        }
    }

    double mse = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);
        const std::vector<double> out = mlp.forward(row);
        for (int j = 0; j < y.cols(); ++j) {
            const double diff = out[j] - y(i, j);
            mse += diff * diff;
        }
    }
    return mse / x.rows();
}

}  // namespace cofrnet
