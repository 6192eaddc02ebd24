#include "cofrnet/poly_encoder.hpp"

#include <cmath>
#include <random>
#include <string>

namespace cofrnet {

double AffineFunctional::eval(std::span<const double> x) const {
    double acc = b;
    for (size_t j = 0; j < v.size(); ++j) acc += v[j] * x[j];
    return acc;
}

int GeneralizedCF::input_dim() const {
    return numerators.empty() ? 0 : static_cast<int>(numerators.front().v.size());
}

void GeneralizedCF::validate(int p) const {
    if (depth < 0) throw ConfigError("generalized CF depth must be non-negative");
    if (static_cast<int>(numerators.size()) != depth + 1)
        throw DimensionError("generalized CF needs depth+1 numerators");
    if (static_cast<int>(denominators.size()) != depth)
        throw DimensionError("generalized CF needs depth denominators");
    for (const AffineFunctional& f : numerators)
        if (static_cast<int>(f.v.size()) != p)
            throw DimensionError("generalized CF numerator width mismatch");
    for (const AffineFunctional& f : denominators)
        if (static_cast<int>(f.v.size()) != p)
            throw DimensionError("generalized CF denominator width mismatch");
}

namespace {

long double affine_eval_ld(const AffineFunctional& f, std::span<const double> x) {
    long double acc = f.b;
    for (size_t j = 0; j < f.v.size(); ++j)
        acc += static_cast<long double>(f.v[j]) * x[j];
    return acc;
}

long double gcf_eval_ld(const GeneralizedCF& g, std::span<const double> x,
                        long double* min_abs_den) {
    const int d = g.depth;
    long double min_den = HUGE_VALL;
    long double t = 0.0L;
    for (int k = d; k >= 1; --k) {
        const long double den = 1.0L + affine_eval_ld(g.denominators[k - 1], x) + t;
        min_den = std::min(min_den, std::fabs(den));
        if (den == 0.0L)
            throw PoleError("generalized CF pole at stage " + std::to_string(k), -1, k);
        t = affine_eval_ld(g.numerators[k], x) / den;
    }
    const long double base = 1.0L + t;
    min_den = std::min(min_den, std::fabs(base));
    if (base == 0.0L) throw PoleError("generalized CF pole at stage 0", -1, 0);
    if (min_abs_den) *min_abs_den = min_den;
    return affine_eval_ld(g.numerators[0], x) / base;
}

}  // namespace

double gcf_eval(const GeneralizedCF& g, std::span<const double> x, double* min_abs_den) {
    if (static_cast<int>(x.size()) != g.input_dim())
        throw DimensionError("input length does not match generalized CF width");
    long double min_den = HUGE_VALL;
    const long double v = gcf_eval_ld(g, x, &min_den);
    if (min_abs_den) *min_abs_den = static_cast<double>(min_den);
    return static_cast<double>(v);
}

void SparsePoly::validate() const {
    if (num_vars < 1) throw DimensionError("polynomial needs at least one variable");
    for (const Monomial& m : monomials) {
        if (m.dirs.empty())
            throw ConfigError("monomial needs at least one direction vector");
        for (const std::vector<double>& u : m.dirs) {
            if (static_cast<int>(u.size()) != num_vars)
                throw DimensionError("monomial direction width mismatch");
            for (double v : u)
                if (!std::isfinite(v)) throw ConfigError("monomial direction is not finite");
        }
        if (!std::isfinite(m.coeff)) throw ConfigError("monomial coefficient is not finite");
    }
}

double poly_eval(const SparsePoly& poly, std::span<const double> x) {
    long double acc = poly.constant;
    for (const Monomial& m : poly.monomials) {
        long double term = m.coeff;
        for (const std::vector<double>& u : m.dirs) {
            long double dot = 0.0L;
            for (size_t j = 0; j < u.size(); ++j)
                dot += static_cast<long double>(u[j]) * x[j];
            term *= dot;
        }
        acc += term;
    }
    return static_cast<double>(acc);
}

GeneralizedCF euler_ladder(double c, std::span<const std::vector<double>> dirs,
                           int num_vars) {
    const int d = static_cast<int>(dirs.size());
    const int p = num_vars > 0 ? num_vars
                               : (d == 0 ? 1 : static_cast<int>(dirs[0].size()));

    GeneralizedCF g;
    g.depth = d;
    g.numerators.push_back({std::vector<double>(p, 0.0), c});
    for (int k = 1; k <= d; ++k) {
        std::vector<double> neg(dirs[k - 1]);
        for (double& v : neg) v = -v;
        g.numerators.push_back({std::move(neg), 0.0});
        g.denominators.push_back({dirs[k - 1], 0.0});
    }
    g.validate(p);
    return g;
}

std::pair<GeneralizedCF, GeneralizedCF> encode_monomial(
    double c, std::span<const std::vector<double>> dirs) {
    if (dirs.empty()) throw ConfigError("cannot encode a monomial with no directions");
    const int p = static_cast<int>(dirs[0].size());
    return {euler_ladder(c, dirs, p),
            euler_ladder(c, dirs.subspan(0, dirs.size() - 1), p)};
}

std::vector<SignedGcf> encode_poly(const SparsePoly& poly) {
    poly.validate();
    std::vector<SignedGcf> enc;
    if (poly.constant != 0.0)
        enc.push_back({euler_ladder(poly.constant, {}, poly.num_vars), 1});
    for (const Monomial& m : poly.monomials) {
        auto [full, partial] = encode_monomial(m.coeff, m.dirs);
        enc.push_back({std::move(full), 1});
        enc.push_back({std::move(partial), -1});
    }
    return enc;
}

double eval_encoding(std::span<const SignedGcf> enc, std::span<const double> x) {
    long double acc = 0.0L;
    for (const SignedGcf& sg : enc)
        acc += static_cast<long double>(sg.sign) * gcf_eval(sg.gcf, x);
    return static_cast<double>(acc);
}

VerifyResult verify_encoding(const SparsePoly& poly, std::span<const SignedGcf> enc,
                             int trials, double box_half_width, std::uint64_t seed) {
    poly.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-box_half_width, box_half_width);

    VerifyResult r;
    std::vector<double> x(poly.num_vars);
    for (int t = 0; t < trials; ++t) {
        for (double& v : x) v = unif(rng);

        bool adjacent = false;
        long double sum = 0.0L;
        for (const SignedGcf& sg : enc) {
            double min_den = HUGE_VAL;
            double v = 0.0;
            try {
                v = gcf_eval(sg.gcf, x, &min_den);
            } catch (const PoleError&) {
                adjacent = true;
                break;
            }
            if (min_den < kVerifyPoleTol) {
                adjacent = true;
                break;
            }
            sum += static_cast<long double>(sg.sign) * v;
        }
        if (adjacent) {
            ++r.skipped;
            continue;
        }
        const double truth = poly_eval(poly, x);
        const double err = std::fabs(static_cast<double>(sum) - truth) /
                           std::max(1.0, std::fabs(truth));
        r.max_rel_error = std::max(r.max_rel_error, err);
        ++r.accepted;
    }
    return r;
}

}  // namespace cofrnet
