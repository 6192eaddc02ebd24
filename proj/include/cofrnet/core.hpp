#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cofrnet {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Evaluation hit (or came numerically too close to) a vanishing denominator.
/// `ladder` and `stage` are -1 when not applicable.
class PoleError : public Error {
public:
    PoleError(const std::string& msg, int ladder = -1, int stage = -1)
        : Error(msg), ladder_(ladder), stage_(stage) {}
    int ladder() const { return ladder_; }
    int stage() const { return stage_; }

private:
    int ladder_;
    int stage_;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix (small sizes only; no BLAS needed at this scale)
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

enum class Variant { F, D, DL };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// One continued-fraction ladder: depth d means d reciprocal steps, realized
/// by d+1 affine functionals a_0..a_d over the input. Row k of `weights`
/// holds the weights of a_k, with the last column acting as the bias term.
/// Columns outside `feature_mask` (other than the bias column) must be zero.
struct Ladder {
    int depth = 0;
    Matrix weights;                 // (depth+1) x (p+1)
    std::vector<int> feature_mask;  // sorted, unique, subset of [0, p)

    int input_dim() const { return weights.cols() - 1; }
    bool is_singleton() const { return feature_mask.size() == 1; }

    /// a_k(x) = w_k . x + bias_k, summed over masked columns only.
    double affine(int k, std::span<const double> x) const;

    void validate() const;
};

/// Pre-activation denominators z_k and activated values s_k = safe_recip(z_k),
/// recorded bottom-up during a forward pass. Index k-1 holds rung k (k=1..d).
struct LayerTrace {
    std::vector<double> z;
    std::vector<double> s;
};

struct CoFrNetModel {
    Variant variant = Variant::F;
    int input_dim = 0;   // p
    int output_dim = 0;  // q
    double epsilon = 0.1;
    std::vector<Ladder> ladders;
    Matrix mixing;                   // L x q
    std::vector<double> output_bias; // q

    int num_ladders() const { return static_cast<int>(ladders.size()); }
    void validate() const;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Pole-safe reciprocal: sgn(z) / max(|z|, eps), with sgn(0) := +1 so the
/// function is total. Exactly 1/z whenever |z| >= eps.
double safe_recip(double z, double eps);

/// Derivative of safe_recip in z: -1/z^2 when |z| >= eps (the boundary uses
/// the unclamped branch), 0 inside the clamped region.
double safe_recip_grad(double z, double eps);

/// Evaluates a ladder bottom-up: s_d = safe_recip(a_d), s_k = safe_recip(a_k
/// + s_{k+1}), value = a_0 + s_1 (a_0 alone when depth is 0). When `trace`
/// is non-null it receives all z_k and s_k.
double ladder_eval(const Ladder& ladder, std::span<const double> x, double eps,
                   LayerTrace* trace = nullptr);

/// mixing^T . (ladder values) + output bias.
std::vector<double> model_eval(const CoFrNetModel& model, std::span<const double> x);

struct ParamCount {
    long actual = 0;                      // stored weights: ladder rows over mask+bias
                                          // columns, plus mixing (output bias excluded)
    std::optional<long> closed_form;      // p*L*(d-1) + L*q; variant F, uniform depth only
};

ParamCount param_count(const CoFrNetModel& model);

}  // namespace cofrnet
