#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cofrnet/core.hpp"
#include "cofrnet/training.hpp"

namespace cofrnet {

/// A registered two-variable benchmark function with its conventional
/// sampling box and the ladder depth used to fit it (the polynomial degree,
/// or 6 for non-polynomial shapes).
struct SyntheticFn {
    std::string key;      // csv/cli identifier, e.g. "matyas"
    std::string display;  // report label, e.g. "Matyas"
    std::function<double(double, double)> f;
    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
    int depth = 0;
    bool polynomial = false;
};

/// All ten benchmark functions, in report row order.
const std::vector<SyntheticFn>& registry();

/// Lookup by key; throws ConfigError for unknown names.
const SyntheticFn& find_function(const std::string& key);

/// 100 * mean |pred - target| / (max target - min target). Throws
/// ConfigError when the targets are all equal (zero range).
double mape(std::span<const double> pred, std::span<const double> target);

/// Smallest positive width W minimizing |pW + (d-2)W^2 + Wq - target|;
/// ties broken toward the larger W. Requires d >= 2.
int matched_mlp_width(int p, int d, int q, long target_params);

/// Per-feature mean/std pairs fitted on a sample; constant columns keep
/// std 1 so standardization stays invertible.
struct Moments {
    std::vector<double> mean, std;
};

Moments fit_moments(const Matrix& m);
void apply_moments(Matrix& m, const Moments& mo);

struct FitOutcome {
    CoFrNetModel model;       // trained on standardized inputs/targets
    Moments input_moments;
    Moments target_moments;
    double train_mape = 0.0;
    double resample_mape = 0.0;
    bool diverged = false;
};

/// Samples 300 points from the function's box, standardizes, and fits a
/// single full ladder of the registered depth.
FitOutcome fit_cofrnet(const SyntheticFn& fn, std::uint64_t seed);

struct BenchResult {
    std::string function;
    double cofrnet_mape = 0.0;
    double mlp_mape = 0.0;
    double cofrnet_mape_resample = 0.0;
    double mlp_mape_resample = 0.0;
    std::uint64_t seed = 0;
    int depth = 0;
    int mlp_width = 0;
    long cofrnet_params = 0;  // pL(d-1) + Lq with L = 1
    long mlp_params = 0;      // pW + (d-2)W^2 + Wq
    bool cofrnet_diverged = false;
    bool mlp_diverged = false;
    std::string mlp_activation = "tanh";
};

/// Trains CoFrNet-F and the parameter-matched MLP on the same 300-point
/// sample and reports range-normalized MAPE on that sample (plus a fresh
/// resample). Training divergence is recorded, not raised.
BenchResult run_benchmark(const SyntheticFn& fn, std::uint64_t seed);

/// Runs `run_benchmark` for a subset of functions (all when `only` is
/// empty), preserving registry order.
std::vector<BenchResult> run_benchmarks(std::span<const std::string> only,
                                        std::uint64_t seed);

std::string report_csv(std::span<const BenchResult> results);
void write_report_csv(const std::string& path, std::span<const BenchResult> results);

}  // namespace cofrnet
