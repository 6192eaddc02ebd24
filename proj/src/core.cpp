#include "cofrnet/core.hpp"

#include <algorithm>
#include <cmath>

namespace cofrnet {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::F: return "f";
        case Variant::D: return "d";
        case Variant::DL: return "dl";
    }
    return "f";
}

Variant variant_from_string(const std::string& s) {
    if (s == "f" || s == "F") return Variant::F;
    if (s == "d" || s == "D") return Variant::D;
    if (s == "dl" || s == "DL" || s == "Dl") return Variant::DL;
    throw ConfigError("unknown variant '" + s + "' (expected f, d or dl)");
}

double Ladder::affine(int k, std::span<const double> x) const {
    double acc = weights(k, input_dim());  // bias column
    for (int j : feature_mask) acc += weights(k, j) * x[j];
    return acc;
}

void Ladder::validate() const {
    if (depth < 0) throw ConfigError("ladder depth must be non-negative");
    if (weights.rows() != depth + 1)
        throw DimensionError("ladder weights must have depth+1 rows (got " +
                             std::to_string(weights.rows()) + " for depth " +
                             std::to_string(depth) + ")");
    const int p = input_dim();
    if (p < 1) throw DimensionError("ladder needs at least one input column plus bias");
    if (feature_mask.empty()) throw ConfigError("ladder feature mask is empty");
    if (!std::is_sorted(feature_mask.begin(), feature_mask.end()) ||
        std::adjacent_find(feature_mask.begin(), feature_mask.end()) != feature_mask.end())
        throw ConfigError("ladder feature mask must be sorted and unique");
    if (feature_mask.front() < 0 || feature_mask.back() >= p)
        throw DimensionError("ladder feature mask index out of range");
    // masked-out columns must be identically zero
    std::vector<bool> active(p, false);
    for (int j : feature_mask) active[j] = true;
    for (int k = 0; k <= depth; ++k)
        for (int j = 0; j < p; ++j)
            if (!active[j] && weights(k, j) != 0.0)
                throw ConfigError("ladder has a nonzero weight outside its feature mask (row " +
                                  std::to_string(k) + ", column " + std::to_string(j) + ")");
}

void CoFrNetModel::validate() const {
    if (input_dim < 1 || output_dim < 1)
        throw DimensionError("model needs input_dim >= 1 and output_dim >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (ladders.empty()) throw DimensionError("model must contain at least one ladder");
    const int L = num_ladders();
    if (mixing.rows() != L || mixing.cols() != output_dim)
        throw DimensionError("mixing must be (num_ladders x output_dim)");
    if (static_cast<int>(output_bias.size()) != output_dim)
        throw DimensionError("output bias length must equal output_dim");
    for (const Ladder& l : ladders) {
        if (l.input_dim() != input_dim)
            throw DimensionError("ladder input width does not match model input_dim");
        l.validate();
    }
    if (variant == Variant::D) {
        for (const Ladder& l : ladders)
            if (!l.is_singleton())
                throw ConfigError("variant d requires every ladder to be single-feature");
    } else if (variant == Variant::DL) {
        if (L < input_dim)
            throw ConfigError("variant dl requires one single-feature ladder per input");
        for (int i = 0; i < input_dim; ++i)
            if (!(ladders[i].is_singleton() && ladders[i].feature_mask[0] == i))
                throw ConfigError("variant dl: ladder " + std::to_string(i) +
                                  " must be masked to feature " + std::to_string(i));
        int prev_depth = 2;
        for (int i = input_dim; i < L; ++i) {
            const Ladder& l = ladders[i];
            if (static_cast<int>(l.feature_mask.size()) != input_dim)
                throw ConfigError("variant dl: ladder " + std::to_string(i) + " must be full");
            if (l.depth < prev_depth)
                throw ConfigError("variant dl: full ladders need non-decreasing depth >= 2");
            prev_depth = l.depth;
        }
    } else {
        for (const Ladder& l : ladders)
            if (static_cast<int>(l.feature_mask.size()) != input_dim)
                throw ConfigError("variant f requires full ladders");
    }
}

double safe_recip(double z, double eps) {
    const double sgn = std::signbit(z) ? -1.0 : 1.0;  // sgn(0) = +1
    return sgn / std::max(std::fabs(z), eps);
}

double safe_recip_grad(double z, double eps) {
    if (std::fabs(z) >= eps) return -1.0 / (z * z);
    return 0.0;
}

double ladder_eval(const Ladder& ladder, std::span<const double> x, double eps,
                   LayerTrace* trace) {
    if (static_cast<int>(x.size()) != ladder.input_dim())
        throw DimensionError("input length does not match ladder width");
    if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");

    const int d = ladder.depth;
    if (trace) {
        trace->z.assign(d, 0.0);
        trace->s.assign(d, 0.0);
    }
    if (d == 0) return ladder.affine(0, x);

    double s = 0.0;
    for (int k = d; k >= 1; --k) {
        const double z = ladder.affine(k, x) + s;
        s = safe_recip(z, eps);
        if (trace) {
            trace->z[k - 1] = z;
            trace->s[k - 1] = s;
        }
    }
    return ladder.affine(0, x) + s;
}

std::vector<double> model_eval(const CoFrNetModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.input_dim)
        throw DimensionError("input length does not match model input_dim");
    if (model.ladders.empty() || model.mixing.rows() != model.num_ladders() ||
        model.mixing.cols() != model.output_dim)
        throw DimensionError("model mixing shape is inconsistent with its ladders");

    std::vector<double> out(model.output_bias);
    for (int l = 0; l < model.num_ladders(); ++l) {
        const double v = ladder_eval(model.ladders[l], x, model.epsilon);
        for (int j = 0; j < model.output_dim; ++j) out[j] += model.mixing(l, j) * v;
    }
    return out;
}

ParamCount param_count(const CoFrNetModel& model) {
    ParamCount pc;
    for (const Ladder& l : model.ladders)
        pc.actual += static_cast<long>(l.depth + 1) *
                     (static_cast<long>(l.feature_mask.size()) + 1);
    pc.actual += static_cast<long>(model.num_ladders()) * model.output_dim;

    if (model.variant == Variant::F) {
        bool uniform = true;
        const int d = model.ladders.front().depth;
        for (const Ladder& l : model.ladders) uniform = uniform && (l.depth == d);
        if (uniform) {
            const long L = model.num_ladders();
            pc.closed_form = static_cast<long>(model.input_dim) * L * (d - 1) +
                             L * model.output_dim;
        }
    }
    return pc;
}

}  // namespace cofrnet
