#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cofrnet/core.hpp"

namespace cofrnet {

/// v . x + b.
struct AffineFunctional {
    std::vector<double> v;
    double b = 0.0;

    double eval(std::span<const double> x) const;
};

/// Continued fraction with affine numerators and denominators:
///   N_0 / (1 + N_1 / (D_1 + N_2 / (D_2 + ... + N_d / D_d)))
/// where N_k = v_k . x + alpha_k and D_k = 1 + w_k . x + beta_k (the leading
/// 1 is implicit in the stored denominator functionals). Verification and
/// compilation target only; not trainable.
struct GeneralizedCF {
    int depth = 0;
    std::vector<AffineFunctional> numerators;    // d+1 entries
    std::vector<AffineFunctional> denominators;  // d entries, stored without the leading 1

    int input_dim() const;
    void validate(int p) const;
};

/// Exact nested evaluation, no clamping; long double internally for headroom
/// near poles. Throws PoleError with the stage index when an intermediate
/// denominator is exactly zero. When `min_abs_den` is non-null it receives
/// the smallest |denominator| encountered.
double gcf_eval(const GeneralizedCF& g, std::span<const double> x,
                double* min_abs_den = nullptr);

/// A sparse polynomial over linear forms: constant plus monomials
/// c * prod_k (u_k . x); repeated directions produce powers.
struct Monomial {
    double coeff = 0.0;
    std::vector<std::vector<double>> dirs;
};

struct SparsePoly {
    int num_vars = 0;
    double constant = 0.0;
    std::vector<Monomial> monomials;

    void validate() const;
};

double poly_eval(const SparsePoly& poly, std::span<const double> x);

/// The product-sum ladder a_0 + a_0 a_1 + ... + a_0 a_1 ... a_d realized as a
/// generalized CF with N_0 = c, N_k = -(u_k . x), D_k = 1 + (u_k . x).
/// num_vars is inferred from dirs when 0; pass it explicitly for depth 0.
GeneralizedCF euler_ladder(double c, std::span<const std::vector<double>> dirs,
                           int num_vars = 0);

/// Encodes c * prod_k (u_k . x) as the difference of two product-sum
/// ladders: value = gcf_eval(first) - gcf_eval(second). Throws ConfigError
/// when dirs is empty.
std::pair<GeneralizedCF, GeneralizedCF> encode_monomial(
    double c, std::span<const std::vector<double>> dirs);

struct SignedGcf {
    GeneralizedCF gcf;
    int sign = 1;  // +1 or -1
};

/// Term-by-term encoding of a sparse polynomial. At most 2*|monomials| + 1
/// ladders; a zero constant term contributes none.
std::vector<SignedGcf> encode_poly(const SparsePoly& poly);

/// sum_i sign_i * gcf_eval(gcf_i, x).
double eval_encoding(std::span<const SignedGcf> enc, std::span<const double> x);

/// Intermediate denominators smaller than this in magnitude mark a sample as
/// pole-adjacent during verification.
inline constexpr double kVerifyPoleTol = 1e-8;

struct VerifyResult {
    double max_rel_error = 0.0;  // |encoded - direct| / max(1, |direct|)
    int accepted = 0;
    int skipped = 0;
};

/// Samples x uniformly from [-box_half_width, box_half_width]^p, skips
/// pole-adjacent points, and compares the signed-sum evaluation against the
/// direct polynomial value.
VerifyResult verify_encoding(const SparsePoly& poly, std::span<const SignedGcf> enc,
                             int trials, double box_half_width, std::uint64_t seed = 0);

}  // namespace cofrnet
