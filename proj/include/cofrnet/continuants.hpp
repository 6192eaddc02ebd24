#pragma once

#include <span>
#include <vector>

#include "cofrnet/core.hpp"

namespace cofrnet {

/// Continuants whose magnitude falls below this are treated as poles rather
/// than producing huge ratios.
inline constexpr double kPoleTolerance = 1e-12;

/// k[m] is the continuant over the last m entries of the sequence it was
/// built from: k[0] = 1, k[1] = a_d, and
/// k[m] = a_{d-m+1} * k[m-1] + k[m-2].
struct ContinuantTable {
    std::vector<double> k;
};

/// All suffix continuants of a = (a_0..a_d) in O(d).
ContinuantTable continuant_suffix_table(std::span<const double> a);

/// Continuant of an arbitrary contiguous sequence via the append recurrence
/// K(b_1..b_m) = b_m * K(b_1..b_{m-1}) + K(b_1..b_{m-2}); empty sequence = 1.
double continuant(std::span<const double> a);

/// Independent oracle: determinant of the tridiagonal matrix with diagonal a,
/// superdiagonal +1 and subdiagonal -1, computed by generic expansion by
/// minors along the first row (never by the three-term recurrence). Empty
/// sequence returns 1.
double continuant_det_oracle(std::span<const double> a);

/// Continued-fraction value a_0 + 1/(a_1 + 1/(... + 1/a_d)) as the continuant
/// ratio K_{d+1}(a_0..a_d) / K_d(a_1..a_d). Throws PoleError when the
/// denominator continuant vanishes.
double cf_via_continuants(std::span<const double> a);

/// Exact input gradient of the unclamped fraction. `clamped` reports whether
/// the clamped forward pass at eps would have touched the flat region at this
/// x, i.e. the gradient then describes the ideal fraction rather than the
/// network actually evaluated.
struct InputGradient {
    std::vector<double> ddx;  // length p
    bool clamped = false;
};

/// d f / d x_j = sum_k (-1)^k (K_{d-k}(a_{k+1}..a_d) / K_d(a_1..a_d))^2 w_{jk},
/// computed from one suffix table in O(d p). Throws PoleError when
/// |K_d(a_1..a_d)| < kPoleTolerance.
InputGradient ic_input_gradient(const Ladder& ladder, std::span<const double> x,
                                double eps = 0.1);

struct AttributionResult {
    Matrix ddx;  // p x q
    bool clamped = false;
};

/// Mixing-weighted sum of per-ladder input gradients, one column per output.
/// PoleError is re-thrown tagged with the offending ladder index.
AttributionResult ic_model_attribution(const CoFrNetModel& model,
                                       std::span<const double> x);

struct IdentityPair {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Both sides of
///   K_k(a_0..a_{k-1}) K_d(a_1..a_d) - K_{k-1}(a_1..a_{k-1}) K_{d+1}(a_0..a_d)
///     = (-1)^k K_{d-k}(a_{k+1}..a_d)
/// for property testing; K_{-1} = 0 at k = 0. Throws std::out_of_range when
/// k is not in [0, d].
IdentityPair lemma_identity_check(std::span<const double> a, int k);

}  // namespace cofrnet
