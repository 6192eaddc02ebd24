#include "cofrnet/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cofrnet {

MultiSeries::MultiSeries(int num_vars, int max_degree, std::vector<double> center)
    : num_vars_(num_vars), max_degree_(max_degree), center_(std::move(center)) {
    if (num_vars_ < 1) throw DimensionError("series needs at least one variable");
    if (max_degree_ < 0) throw ConfigError("series max degree must be non-negative");
    if (center_.empty()) center_.assign(num_vars_, 0.0);
    if (static_cast<int>(center_.size()) != num_vars_)
        throw DimensionError("series center length does not match num_vars");
}

MultiSeries MultiSeries::constant(int num_vars, int max_degree, double value,
                                  std::vector<double> center) {
    MultiSeries s(num_vars, max_degree, std::move(center));
    s.set_coefficient(ExpVec(num_vars, 0), value);
    return s;
}

MultiSeries MultiSeries::affine(int num_vars, int max_degree, double c0,
                                std::span<const double> linear,
                                std::vector<double> center) {
    if (static_cast<int>(linear.size()) != num_vars)
        throw DimensionError("affine series: linear part length mismatch");
    MultiSeries s(num_vars, max_degree, std::move(center));
    s.set_coefficient(ExpVec(num_vars, 0), c0);
    if (max_degree >= 1) {
        ExpVec e(num_vars, 0);
        for (int j = 0; j < num_vars; ++j) {
            e[j] = 1;
            s.set_coefficient(e, linear[j]);
            e[j] = 0;
        }
    }
    return s;
}

double MultiSeries::coefficient(const ExpVec& exps) const {
    auto it = terms_.find(exps);
    return it == terms_.end() ? 0.0 : it->second;
}

void MultiSeries::set_coefficient(const ExpVec& exps, double value) {
    if (static_cast<int>(exps.size()) != num_vars_)
        throw DimensionError("exponent tuple length does not match num_vars");
    const int total = std::accumulate(exps.begin(), exps.end(), 0);
    if (total > max_degree_)
        throw ConfigError("exponent tuple exceeds the series max degree");
    if (std::fabs(value) < kSeriesPrune)
        terms_.erase(exps);
    else
        terms_[exps] = value;
}

double MultiSeries::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != num_vars_)
        throw DimensionError("evaluation point length does not match num_vars");
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
        double term = c;
        for (int j = 0; j < num_vars_; ++j) {
            const double t = x[j] - center_[j];
            for (int r = 0; r < e[j]; ++r) term *= t;
        }
        acc += term;
    }
    return acc;
}

bool MultiSeries::same_shape(const MultiSeries& other) const {
    return num_vars_ == other.num_vars_ && max_degree_ == other.max_degree_ &&
           center_ == other.center_;
}

namespace {

void require_same_shape(const MultiSeries& a, const MultiSeries& b) {
    if (!a.same_shape(b))
        throw DimensionError("series operands disagree in num_vars, degree or center");
}

void prune(MultiSeries::TermMap& terms) {
    for (auto it = terms.begin(); it != terms.end();) {
        if (std::fabs(it->second) < kSeriesPrune)
            it = terms.erase(it);
        else
            ++it;
    }
}

}  // namespace

MultiSeries series_add(const MultiSeries& a, const MultiSeries& b) {
    require_same_shape(a, b);
    MultiSeries out = a;
    for (const auto& [e, c] : b.terms_) out.terms_[e] += c;
    prune(out.terms_);
    return out;
}

MultiSeries series_scale(const MultiSeries& s, double factor) {
    MultiSeries out = s;
    for (auto& [e, c] : out.terms_) c *= factor;
    prune(out.terms_);
    return out;
}

MultiSeries series_affine_output(const MultiSeries& s, double scale, double offset) {
    MultiSeries out = series_scale(s, scale);
    MultiSeries::ExpVec zero(s.num_vars(), 0);
    out.set_coefficient(zero, out.coefficient(zero) + offset);
    return out;
}

MultiSeries series_mul(const MultiSeries& a, const MultiSeries& b) {
    require_same_shape(a, b);
    const int D = a.max_degree();
    const int p = a.num_vars();

    struct Flat {
        const MultiSeries::ExpVec* e;
        double c;
        int deg;
    };
    auto flatten = [](const MultiSeries& s) {
        std::vector<Flat> v;
        v.reserve(s.terms().size());
        for (const auto& [e, c] : s.terms())
            v.push_back({&e, c, std::accumulate(e.begin(), e.end(), 0)});
        return v;
    };
    const std::vector<Flat> fa = flatten(a);
    const std::vector<Flat> fb = flatten(b);

    MultiSeries out(p, D, a.center());
    MultiSeries::ExpVec e(p);
    for (const Flat& ta : fa) {
        for (const Flat& tb : fb) {
            if (ta.deg + tb.deg > D) continue;
            for (int j = 0; j < p; ++j) e[j] = (*ta.e)[j] + (*tb.e)[j];
            out.terms_[e] += ta.c * tb.c;
        }
    }
    prune(out.terms_);
    return out;
}

MultiSeries series_recip(const MultiSeries& s) {
    const double c0 = s.constant_term();
    if (std::fabs(c0) < kSeriesSingularTol)
        throw SingularExpansionError("series reciprocal of a (near-)zero constant term");

    // h = -(s - c0)/c0 has no constant term, so sum_{k<=D} h^k is exact to
    // degree D; evaluate the geometric sum by Horner.
    MultiSeries h = series_scale(s, -1.0 / c0);
    h.set_coefficient(MultiSeries::ExpVec(s.num_vars(), 0), 0.0);

    const MultiSeries one = MultiSeries::constant(s.num_vars(), s.max_degree(), 1.0, s.center());
    MultiSeries acc = one;
    for (int k = 0; k < s.max_degree(); ++k) acc = series_add(one, series_mul(h, acc));
    return series_scale(acc, 1.0 / c0);
}

MultiSeries ladder_to_series(const Ladder& ladder, int max_degree,
                             std::span<const double> center) {
    if (static_cast<int>(center.size()) != ladder.input_dim())
        throw DimensionError("center length does not match ladder width");

    const int p = ladder.input_dim();
    const int d = ladder.depth;
    std::vector<double> c(center.begin(), center.end());

    auto rung_series = [&](int k) {
        std::vector<double> linear(p, 0.0);
        for (int j : ladder.feature_mask) linear[j] = ladder.weights(k, j);
        return MultiSeries::affine(p, max_degree, ladder.affine(k, center), linear, c);
    };

    if (d == 0) return rung_series(0);

    MultiSeries s = [&] {
        try {
            return series_recip(rung_series(d));
        } catch (const SingularExpansionError&) {
            throw SingularExpansionError(
                "ladder expansion singular at rung " + std::to_string(d), d);
        }
    }();
    for (int k = d - 1; k >= 1; --k) {
        const MultiSeries denom = series_add(rung_series(k), s);
        try {
            s = series_recip(denom);
        } catch (const SingularExpansionError&) {
            throw SingularExpansionError(
                "ladder expansion singular at rung " + std::to_string(k), k);
        }
    }
    return series_add(rung_series(0), s);
}

std::vector<MultiSeries> model_to_series(const CoFrNetModel& model, int max_degree,
                                         std::span<const double> center) {
    if (static_cast<int>(center.size()) != model.input_dim)
        throw DimensionError("center length does not match model input_dim");

    std::vector<double> c(center.begin(), center.end());
    std::vector<MultiSeries> out;
    out.reserve(model.output_dim);
    for (int j = 0; j < model.output_dim; ++j)
        out.push_back(MultiSeries::constant(model.input_dim, max_degree,
                                            model.output_bias[j], c));

    for (int l = 0; l < model.num_ladders(); ++l) {
        MultiSeries s = [&] {
            try {
                return ladder_to_series(model.ladders[l], max_degree, center);
            } catch (const SingularExpansionError& e) {
                throw SingularExpansionError(
                    "ladder " + std::to_string(l) + ": " + e.what(), e.stage(), l);
            }
        }();
        for (int j = 0; j < model.output_dim; ++j)
            out[j] = series_add(out[j], series_scale(s, model.mixing(l, j)));
    }
    return out;
}

std::vector<SeriesTerm> series_report(const MultiSeries& s, int top_k) {
    double max_mag = 0.0;
    for (const auto& [e, c] : s.terms()) max_mag = std::max(max_mag, std::fabs(c));

    std::vector<SeriesTerm> out;
    out.reserve(s.terms().size());
    for (const auto& [e, c] : s.terms())
        out.push_back({e, c, max_mag > 0.0 ? c / max_mag : 0.0});

    std::stable_sort(out.begin(), out.end(), [](const SeriesTerm& a, const SeriesTerm& b) {
        const double ma = std::fabs(a.coefficient);
        const double mb = std::fabs(b.coefficient);
        if (ma != mb) return ma > mb;
        return a.exponents < b.exponents;
    });
    if (top_k >= 0 && static_cast<int>(out.size()) > top_k) out.resize(top_k);
    return out;
}

std::string format_monomial(std::span<const int> exponents) {
    std::string s;
    for (size_t j = 0; j < exponents.size(); ++j) {
        if (exponents[j] == 0) continue;
        if (!s.empty()) s += "*";
        s += "x" + std::to_string(j + 1);
        if (exponents[j] > 1) s += "^" + std::to_string(exponents[j]);
    }
    return s.empty() ? "1" : s;
}

}  // namespace cofrnet
