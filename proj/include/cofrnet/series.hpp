#pragma once

#include <map>
#include <span>
#include <vector>

#include "cofrnet/core.hpp"

namespace cofrnet {

/// Coefficients below this magnitude are dropped after every operation.
inline constexpr double kSeriesPrune = 1e-12;

/// Constant terms below this magnitude make a series non-invertible.
inline constexpr double kSeriesSingularTol = 1e-12;

/// Thrown when a truncated-series reciprocal hits a (near-)zero constant
/// term. `stage` is the ladder rung that produced the denominator and
/// `ladder` the ladder index inside a model, -1 when not applicable.
class SingularExpansionError : public Error {
public:
    SingularExpansionError(const std::string& msg, int stage = -1, int ladder = -1)
        : Error(msg), stage_(stage), ladder_(ladder) {}
    int stage() const { return stage_; }
    int ladder() const { return ladder_; }

private:
    int stage_;
    int ladder_;
};

/// A multivariate power series in t = x - center, truncated at a maximum
/// total degree. Terms map an exponent tuple (one entry per variable) to its
/// coefficient; tuples never exceed the total degree, and coefficients below
/// kSeriesPrune are absent.
class MultiSeries {
public:
    using ExpVec = std::vector<int>;
    using TermMap = std::map<ExpVec, double>;  // lexicographic key order

    MultiSeries() = default;
    MultiSeries(int num_vars, int max_degree, std::vector<double> center = {});

    static MultiSeries constant(int num_vars, int max_degree, double value,
                                std::vector<double> center = {});
    /// c0 + sum_j linear[j] * t_j.
    static MultiSeries affine(int num_vars, int max_degree, double c0,
                              std::span<const double> linear,
                              std::vector<double> center = {});

    int num_vars() const { return num_vars_; }
    int max_degree() const { return max_degree_; }
    const std::vector<double>& center() const { return center_; }
    const TermMap& terms() const { return terms_; }

    double coefficient(const ExpVec& exps) const;
    void set_coefficient(const ExpVec& exps, double value);
    double constant_term() const { return coefficient(ExpVec(num_vars_, 0)); }

    /// sum_e c_e * prod_j (x_j - center_j)^{e_j}.
    double evaluate(std::span<const double> x) const;

    bool same_shape(const MultiSeries& other) const;

private:
    int num_vars_ = 0;
    int max_degree_ = 0;
    std::vector<double> center_;
    TermMap terms_;

    friend MultiSeries series_add(const MultiSeries&, const MultiSeries&);
    friend MultiSeries series_scale(const MultiSeries&, double);
    friend MultiSeries series_mul(const MultiSeries&, const MultiSeries&);
};

MultiSeries series_add(const MultiSeries& a, const MultiSeries& b);
MultiSeries series_scale(const MultiSeries& s, double factor);
MultiSeries series_mul(const MultiSeries& a, const MultiSeries& b);

/// y -> scale * y + offset applied to the series as a whole; the offset folds
/// into the constant term. Used to report expansions of standardized-target
/// models in original output units.
MultiSeries series_affine_output(const MultiSeries& s, double scale, double offset);

/// Truncated series of 1/s, exact to the shared max degree:
/// (1/c0) * sum_k (-(s - c0)/c0)^k. Throws SingularExpansionError when the
/// constant term is below kSeriesSingularTol in magnitude.
MultiSeries series_recip(const MultiSeries& s);

/// Expands a ladder around `center` by composing the affine rung series
/// bottom-up through series_recip. Throws SingularExpansionError with the
/// offending rung index when an intermediate denominator has (near-)zero
/// constant term at the center.
MultiSeries ladder_to_series(const Ladder& ladder, int max_degree,
                             std::span<const double> center);

/// Mixing-weighted sum of ladder expansions plus output bias, one series per
/// output. Errors are re-thrown tagged with the ladder index.
std::vector<MultiSeries> model_to_series(const CoFrNetModel& model, int max_degree,
                                         std::span<const double> center);

struct SeriesTerm {
    std::vector<int> exponents;
    double coefficient = 0.0;
    double normalized = 0.0;  // coefficient / max |coefficient| over all terms
};

/// Terms ranked by |coefficient| descending; ties broken by ascending
/// lexicographic exponent order. At most top_k entries.
std::vector<SeriesTerm> series_report(const MultiSeries& s, int top_k);

/// "x1^2*x2" style rendering of an exponent tuple; "1" for the constant term.
std::string format_monomial(std::span<const int> exponents);

}  // namespace cofrnet
