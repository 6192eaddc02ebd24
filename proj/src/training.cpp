#include "cofrnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace cofrnet {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (max_epochs < 0) throw ConfigError("max epochs must be non-negative");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

ForwardCache model_forward(const CoFrNetModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.input_dim)
        throw DimensionError("input length does not match model input_dim");

    ForwardCache c;
    const int L = model.num_ladders();
    c.ladder_values.resize(L);
    c.traces.resize(L);
    for (int l = 0; l < L; ++l)
        c.ladder_values[l] = ladder_eval(model.ladders[l], x, model.epsilon, &c.traces[l]);

    c.output = model.output_bias;
    for (int l = 0; l < L; ++l)
        for (int j = 0; j < model.output_dim; ++j)
            c.output[j] += model.mixing(l, j) * c.ladder_values[l];
    return c;
}

GradientBundle backward(const CoFrNetModel& model, std::span<const double> x,
                        std::span<const double> upstream, const ForwardCache& cache) {
    const int L = model.num_ladders();
    const int q = model.output_dim;
    if (static_cast<int>(upstream.size()) != q)
        throw DimensionError("upstream length does not match output_dim");
    if (static_cast<int>(cache.traces.size()) != L ||
        static_cast<int>(cache.ladder_values.size()) != L)
        throw TrainingError("backward called without a matching forward trace");

    GradientBundle g;
    g.mixing = Matrix(L, q);
    g.output_bias.assign(q, 0.0);
    g.input.assign(model.input_dim, 0.0);
    g.ladder_weights.reserve(L);

    for (int j = 0; j < q; ++j) g.output_bias[j] = upstream[j];

    for (int l = 0; l < L; ++l) {
        const Ladder& lad = model.ladders[l];
        const LayerTrace& trace = cache.traces[l];
        if (static_cast<int>(trace.z.size()) != lad.depth)
            throw TrainingError("backward called without a matching forward trace");

        double g_ladder = 0.0;  // dL / d(ladder value)
        for (int j = 0; j < q; ++j) {
            g.mixing(l, j) = upstream[j] * cache.ladder_values[l];
            g_ladder += model.mixing(l, j) * upstream[j];
        }

        // d(ladder value) / d a_k: rung 0 passes straight through; deeper
        // rungs chain through the clamped reciprocal at each recorded z.
        std::vector<double> da(lad.depth + 1, 0.0);
        da[0] = 1.0;
        double u = 1.0;  // d(value) / d s_k while descending
        for (int k = 1; k <= lad.depth; ++k) {
            u *= safe_recip_grad(trace.z[k - 1], model.epsilon);
            da[k] = u;
        }

        Matrix gw(lad.depth + 1, lad.input_dim() + 1);
        for (int k = 0; k <= lad.depth; ++k) {
            const double scale = g_ladder * da[k];
            for (int j : lad.feature_mask) {
                gw(k, j) = scale * x[j];
                g.input[j] += scale * lad.weights(k, j);
            }
            gw(k, lad.input_dim()) = scale;  // bias column
        }
        g.ladder_weights.push_back(std::move(gw));
    }
    return g;
}

std::vector<double> flatten_params(const CoFrNetModel& model) {
    std::vector<double> flat;
    for (const Ladder& l : model.ladders)
        flat.insert(flat.end(), l.weights.data().begin(), l.weights.data().end());
    flat.insert(flat.end(), model.mixing.data().begin(), model.mixing.data().end());
    flat.insert(flat.end(), model.output_bias.begin(), model.output_bias.end());
    return flat;
}

void unflatten_params(CoFrNetModel& model, std::span<const double> flat) {
    size_t pos = 0;
    for (Ladder& l : model.ladders) {
        std::copy_n(flat.begin() + pos, l.weights.data().size(), l.weights.data().begin());
        pos += l.weights.data().size();
    }
    std::copy_n(flat.begin() + pos, model.mixing.data().size(), model.mixing.data().begin());
    pos += model.mixing.data().size();
    std::copy_n(flat.begin() + pos, model.output_bias.size(), model.output_bias.begin());
    pos += model.output_bias.size();
    if (pos != flat.size()) throw DimensionError("flat parameter vector has wrong length");
}

std::vector<double> flatten_grads(const GradientBundle& g) {
    std::vector<double> flat;
    for (const Matrix& m : g.ladder_weights)
        flat.insert(flat.end(), m.data().begin(), m.data().end());
    flat.insert(flat.end(), g.mixing.data().begin(), g.mixing.data().end());
    flat.insert(flat.end(), g.output_bias.begin(), g.output_bias.end());
    return flat;
}

void AdamState::step(std::span<double> params, std::span<const double> grads,
                     double learning_rate, double weight_decay) {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw DimensionError("optimizer state does not match parameter count");

    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
        v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= learning_rate * (mhat / (std::sqrt(vhat) + kEps) +
                                      weight_decay * params[i]);
    }
}

namespace {

struct LossEval {
    double loss = 0.0;
    std::vector<double> upstream;
};

LossEval eval_loss(Loss loss, std::span<const double> output, const Matrix& y, int row) {
    LossEval e;
    const int q = static_cast<int>(output.size());
    e.upstream.assign(q, 0.0);
    if (loss == Loss::SquaredError) {
        for (int j = 0; j < q; ++j) {
            const double diff = output[j] - y(row, j);
            e.loss += diff * diff;
            e.upstream[j] = 2.0 * diff;
        }
    } else {
        const int label = static_cast<int>(y(row, 0));
        if (label < 0 || label >= q)
            throw TrainingError("class index " + std::to_string(label) +
                                " out of range for " + std::to_string(q) + " outputs");
        double max_logit = output[0];
        for (double v : output) max_logit = std::max(max_logit, v);
        double denom = 0.0;
        for (double v : output) denom += std::exp(v - max_logit);
        e.loss = std::log(denom) - (output[label] - max_logit);
        for (int j = 0; j < q; ++j)
            e.upstream[j] = std::exp(output[j] - max_logit) / denom -
                            (j == label ? 1.0 : 0.0);
    }
    return e;
}

double dataset_loss(const CoFrNetModel& model, Loss loss, const Matrix& x, const Matrix& y) {
    double acc = 0.0;
    std::vector<double> row(x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);
        const std::vector<double> out = model_eval(model, row);
        acc += eval_loss(loss, out, y, i).loss;
    }
    return acc / std::max(1, x.rows());
}

double dataset_metric(const CoFrNetModel& model, Loss loss, const Matrix& x, const Matrix& y) {
    if (loss == Loss::SquaredError) return dataset_loss(model, loss, x, y);
    int correct = 0;
    std::vector<double> row(x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);
        const std::vector<double> out = model_eval(model, row);
        const int pred = static_cast<int>(
            std::max_element(out.begin(), out.end()) - out.begin());
        if (pred == static_cast<int>(y(i, 0))) ++correct;
    }
    return static_cast<double>(correct) / std::max(1, x.rows());
}

// Names the first non-finite tensor for the divergence diagnostic.
std::string first_non_finite(const CoFrNetModel& model) {
    auto bad = [](std::span<const double> v) {
        return std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); });
    };
    for (int l = 0; l < model.num_ladders(); ++l)
        if (bad(model.ladders[l].weights.data()))
            return "ladder " + std::to_string(l) + " weights";
    if (bad(model.mixing.data())) return "mixing weights";
    if (bad(model.output_bias)) return "output bias";
    return "batch loss";
}

}  // namespace

TrainResult train(CoFrNetModel model, const Matrix& x, const Matrix& y,
                  const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg) {
    cfg.validate();
    model.epsilon = cfg.epsilon;
    model.validate();
    if (x.rows() < 1) throw TrainingError("training set is empty");
    if (x.cols() != model.input_dim)
        throw DimensionError("training features do not match model input_dim");
    if (y.rows() != x.rows()) throw DimensionError("feature/target row mismatch");
    if (cfg.loss == Loss::SquaredError && y.cols() != model.output_dim)
        throw DimensionError("target width does not match model output_dim");
    const bool has_val = x_val.rows() > 0;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    const int L = model.num_ladders();
    const int q = model.output_dim;
    std::vector<double> params = flatten_params(model);
    AdamState adam(params.size());

    TrainResult result;
    std::vector<double> best_params = params;
    double best_score = has_val ? dataset_loss(model, cfg.loss, x_val, y_val)
                                : dataset_loss(model, cfg.loss, x, y);
    int best_epoch = 0;
    int stale = 0;

    std::vector<int> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> row(x.cols());
    std::vector<double> grad_acc(params.size());
    std::vector<double> dropout_scale(L);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        for (int start = 0; start < x.rows(); start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, x.rows());
            const int n = end - start;

            // one whole-ladder dropout mask per batch, inverted scaling
            if (cfg.dropout > 0.0) {
                for (int l = 0; l < L; ++l)
                    dropout_scale[l] = unif01(rng) < cfg.dropout
                                           ? 0.0
                                           : 1.0 / (1.0 - cfg.dropout);
            } else {
                std::fill(dropout_scale.begin(), dropout_scale.end(), 1.0);
            }

            std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
            double batch_loss = 0.0;
            for (int bi = start; bi < end; ++bi) {
                const int i = order[bi];
                for (int j = 0; j < x.cols(); ++j) row[j] = x(i, j);

                ForwardCache cache = model_forward(model, row);
                std::vector<double> dropped(q, 0.0);
                for (int j = 0; j < q; ++j) {
                    dropped[j] = model.output_bias[j];
                    for (int l = 0; l < L; ++l)
                        dropped[j] += model.mixing(l, j) * cache.ladder_values[l] *
                                      dropout_scale[l];
                }

                const LossEval le = eval_loss(cfg.loss, dropped, y, i);
                batch_loss += le.loss;

                // fold the dropout mask into the cached ladder values so the
                // standard backward sees the network that actually ran
                ForwardCache masked = cache;
                for (int l = 0; l < L; ++l) masked.ladder_values[l] *= dropout_scale[l];
                GradientBundle g = backward(model, row, le.upstream, masked);
                // rungs of a dropped ladder received no signal at all
                for (int l = 0; l < L; ++l)
                    if (dropout_scale[l] == 0.0)
                        std::fill(g.ladder_weights[l].data().begin(),
                                  g.ladder_weights[l].data().end(), 0.0);
                    else if (dropout_scale[l] != 1.0)
                        for (double& v : g.ladder_weights[l].data()) v *= dropout_scale[l];

                const std::vector<double> flat = flatten_grads(g);
                for (size_t k = 0; k < grad_acc.size(); ++k) grad_acc[k] += flat[k];
            }

            batch_loss /= n;
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    " (first non-finite tensor: " + first_non_finite(model) +
                                    ")");
            for (double& v : grad_acc) v /= n;
            adam.step(params, grad_acc, cfg.learning_rate, cfg.weight_decay);
            unflatten_params(model, params);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = dataset_loss(model, cfg.loss, x, y);
        if (!std::isfinite(stats.train_loss))
            throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                " (first non-finite tensor: " + first_non_finite(model) + ")");
        stats.val_loss = has_val ? dataset_loss(model, cfg.loss, x_val, y_val)
                                 : std::numeric_limits<double>::quiet_NaN();
        stats.val_metric = has_val ? dataset_metric(model, cfg.loss, x_val, y_val)
                                   : dataset_metric(model, cfg.loss, x, y);
        result.history.push_back(stats);

        const double score = has_val ? stats.val_loss : stats.train_loss;
        if (score < best_score) {
            best_score = score;
            best_params = params;
            best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }

    unflatten_params(model, best_params);
    result.model = std::move(model);
    result.best_epoch = best_epoch;
    return result;
}

CoFrNetModel init_model(Variant variant, int p, int q, std::vector<int> depths,
                        int full_ladders, std::uint64_t seed) {
    if (p < 1 || q < 1) throw ConfigError("init_model needs p >= 1 and q >= 1");
    std::mt19937_64 rng(seed);
    const double scale = 0.5 / std::sqrt(static_cast<double>(p));
    std::uniform_real_distribution<double> unif(-scale, scale);

    auto make_ladder = [&](int depth, std::vector<int> mask) {
        Ladder l;
        l.depth = depth;
        l.feature_mask = std::move(mask);
        l.weights = Matrix(depth + 1, p + 1);
        for (int k = 0; k <= depth; ++k) {
            for (int j : l.feature_mask) l.weights(k, j) = unif(rng);
            l.weights(k, p) = unif(rng) + (k >= 1 ? 1.0 : 0.0);  // keep rungs off the clamp
        }
        return l;
    };

    auto broadcast = [&](int count) {
        if (static_cast<int>(depths.size()) == 1) depths.assign(count, depths[0]);
        if (static_cast<int>(depths.size()) != count)
            throw ConfigError("expected " + std::to_string(count) +
                              " depth entries, got " + std::to_string(depths.size()));
    };

    CoFrNetModel m;
    m.variant = variant;
    m.input_dim = p;
    m.output_dim = q;

    std::vector<int> full_mask(p);
    std::iota(full_mask.begin(), full_mask.end(), 0);

    if (variant == Variant::F) {
        if (depths.empty()) throw ConfigError("variant f needs at least one depth");
        for (int d : depths) m.ladders.push_back(make_ladder(d, full_mask));
    } else if (variant == Variant::D) {
        broadcast(p);
        for (int j = 0; j < p; ++j) m.ladders.push_back(make_ladder(depths[j], {j}));
    } else {
        broadcast(p);
        for (int j = 0; j < p; ++j) m.ladders.push_back(make_ladder(depths[j], {j}));
        if (full_ladders < 0) throw ConfigError("full ladder count must be non-negative");
        for (int i = 0; i < full_ladders; ++i)
            m.ladders.push_back(make_ladder(2 + i, full_mask));
    }

    const int L = m.num_ladders();
    m.mixing = Matrix(L, q);
    // mixing starts away from zero so every ladder receives gradient from the
    // first step; 1/sqrt(L) keeps the initial output variance bounded
    const double mix_scale = 1.0 / std::sqrt(static_cast<double>(L));
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    for (int l = 0; l < L; ++l)
        for (int j = 0; j < q; ++j)
            m.mixing(l, j) = (rng() % 2 == 0 ? 1.0 : -1.0) * mag(rng) * mix_scale;
    m.output_bias.assign(q, 0.0);

    m.validate();
    return m;
}

void write_history_csv(const std::string& path, std::span<const EpochStats> history) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open history file '" + path + "' for writing");
    f << "epoch,train_loss,val_loss,val_metric\n";
    f.precision(17);
    for (const EpochStats& s : history)
        f << s.epoch << ',' << s.train_loss << ',' << s.val_loss << ','
          << s.val_metric << '\n';
}

}  // namespace cofrnet
