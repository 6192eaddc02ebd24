#include "cofrnet/continuants.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cofrnet {

ContinuantTable continuant_suffix_table(std::span<const double> a) {
    if (a.empty()) throw DimensionError("continuant table needs a non-empty sequence");
    const int n = static_cast<int>(a.size());
    ContinuantTable t;
    t.k.resize(n + 1);
    t.k[0] = 1.0;
    t.k[1] = a[n - 1];
    for (int m = 2; m <= n; ++m) t.k[m] = a[n - m] * t.k[m - 1] + t.k[m - 2];
    return t;
}

double continuant(std::span<const double> a) {
    double prev = 1.0;  // K of the empty sequence
    double cur = 1.0;
    for (size_t m = 0; m < a.size(); ++m) {
        const double next = a[m] * cur + (m == 0 ? 0.0 : prev);
        prev = cur;
        cur = next;
    }
    return cur;
}

namespace {

// Generic expansion by minors along the first row of a dense n x n matrix
// held in `m` (row-major). Terms with a zero coefficient contribute nothing
// and are not expanded.
double det_by_minors(const std::vector<double>& m, int n) {
    if (n == 0) return 1.0;
    if (n == 1) return m[0];
    double acc = 0.0;
    double sign = 1.0;
    std::vector<double> minor(static_cast<size_t>(n - 1) * (n - 1));
    for (int j = 0; j < n; ++j, sign = -sign) {
        const double coef = m[j];
        if (coef == 0.0) continue;
        size_t w = 0;
        for (int r = 1; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (c != j) minor[w++] = m[static_cast<size_t>(r) * n + c];
        acc += sign * coef * det_by_minors(minor, n - 1);
    }
    return acc;
}

}  // namespace

double continuant_det_oracle(std::span<const double> a) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return 1.0;
    std::vector<double> m(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        m[static_cast<size_t>(i) * n + i] = a[i];
        if (i + 1 < n) {
            m[static_cast<size_t>(i) * n + i + 1] = 1.0;
            m[static_cast<size_t>(i + 1) * n + i] = -1.0;
        }
    }
    return det_by_minors(m, n);
}

double cf_via_continuants(std::span<const double> a) {
    if (a.empty()) throw DimensionError("continued fraction needs a non-empty sequence");
    const ContinuantTable t = continuant_suffix_table(a);
    const int n = static_cast<int>(a.size());
    const double denom = t.k[n - 1];  // K_d(a_1..a_d)
    if (std::fabs(denom) < kPoleTolerance)
        throw PoleError("denominator continuant vanishes");
    return t.k[n] / denom;
}

InputGradient ic_input_gradient(const Ladder& ladder, std::span<const double> x,
                                double eps) {
    if (static_cast<int>(x.size()) != ladder.input_dim())
        throw DimensionError("input length does not match ladder width");

    const int d = ladder.depth;
    std::vector<double> a(d + 1);
    for (int k = 0; k <= d; ++k) a[k] = ladder.affine(k, x);

    const ContinuantTable t = continuant_suffix_table(a);
    const double kd = t.k[d];  // K_d(a_1..a_d)
    if (std::fabs(kd) < kPoleTolerance)
        throw PoleError("input gradient undefined: denominator continuant vanishes");

    InputGradient g;
    g.ddx.assign(ladder.input_dim(), 0.0);
    double sign = 1.0;
    for (int k = 0; k <= d; ++k, sign = -sign) {
        const double ratio = t.k[d - k] / kd;
        const double coef = sign * ratio * ratio;
        for (int j : ladder.feature_mask) g.ddx[j] += coef * ladder.weights(k, j);
    }

    // Flag when the clamped forward pass at eps would flatten any rung here.
    LayerTrace trace;
    ladder_eval(ladder, x, eps, &trace);
    for (double z : trace.z)
        if (std::fabs(z) < eps) {
            g.clamped = true;
            break;
        }
    return g;
}

AttributionResult ic_model_attribution(const CoFrNetModel& model,
                                       std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.input_dim)
        throw DimensionError("input length does not match model input_dim");

    AttributionResult r;
    r.ddx = Matrix(model.input_dim, model.output_dim);
    for (int l = 0; l < model.num_ladders(); ++l) {
        InputGradient g;
        try {
            g = ic_input_gradient(model.ladders[l], x, model.epsilon);
        } catch (const PoleError& e) {
            throw PoleError("ladder " + std::to_string(l) + ": " + e.what(), l);
        }
        r.clamped = r.clamped || g.clamped;
        for (int j = 0; j < model.input_dim; ++j)
            for (int q = 0; q < model.output_dim; ++q)
                r.ddx(j, q) += model.mixing(l, q) * g.ddx[j];
    }
    return r;
}

IdentityPair lemma_identity_check(std::span<const double> a, int k) {
    if (a.empty()) throw DimensionError("identity check needs a non-empty sequence");
    const int d = static_cast<int>(a.size()) - 1;
    if (k < 0 || k > d) throw std::out_of_range("identity index k must lie in [0, d]");

    const double k_prefix = continuant(a.subspan(0, k));                 // K_k(a_0..a_{k-1})
    const double k_mid = (k == 0) ? 0.0 : continuant(a.subspan(1, k - 1));  // K_{k-1}(a_1..a_{k-1}), K_{-1} = 0
    const double k_tail = continuant(a.subspan(1, d));                   // K_d(a_1..a_d)
    const double k_full = continuant(a);                                 // K_{d+1}(a_0..a_d)

    IdentityPair pair;
    pair.lhs = k_prefix * k_tail - k_mid * k_full;
    pair.rhs = ((k % 2 == 0) ? 1.0 : -1.0) * continuant(a.subspan(k + 1, d - k));
    return pair;
}

}  // namespace cofrnet
