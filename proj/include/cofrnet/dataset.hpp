#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cofrnet/core.hpp"
#include "cofrnet/bench.hpp"  // Moments

namespace cofrnet {

class DataError : public Error {
public:
    using Error::Error;
};

enum class Task { Regression, Classification };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

/// Preprocessing state fitted on a dataset; saved alongside models so raw
/// rows can be fed to a trained network later. Targets are only scaled for
/// regression.
struct Standardization {
    bool active = false;
    std::vector<double> feature_mean, feature_std;
    double target_mean = 0.0;
    double target_std = 1.0;

    std::vector<double> transform_features(std::span<const double> raw) const;
    double destandardize_target(double v) const;
};

struct Dataset {
    Matrix x;  // N x p
    Matrix y;  // regression: N x 1 values; classification: N x 1 class indices
    std::vector<std::string> feature_names;
    std::string target_name;
    Task task = Task::Regression;
    std::vector<std::string> class_labels;  // classification, first-appearance order
    Standardization stand;

    int n() const { return x.rows(); }
    int p() const { return x.cols(); }
    int num_classes() const { return static_cast<int>(class_labels.size()); }
};

/// Parses a headered CSV. Features must be numeric and finite; classification
/// targets may be arbitrary strings and are mapped to contiguous indices in
/// first-appearance order. Missing cells and malformed numbers are rejected
/// with their row (1-based, excluding the header) and column.
Dataset load_csv(const std::string& path, const std::string& target_column, Task task);

/// Fits per-column moments and applies them: features always, targets only
/// for regression. Constant columns keep std 1.
void standardize(Dataset& ds);

struct SplitResult {
    Dataset train, val, test;
};

/// Seeded shuffle then a 65/5/30 partition (train and val sizes floored,
/// remainder to test). Requires at least 20 rows.
SplitResult split(const Dataset& ds, std::uint64_t seed);

}  // namespace cofrnet
