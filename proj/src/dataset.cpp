#include "cofrnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace cofrnet {

std::string to_string(Task t) {
    return t == Task::Regression ? "regression" : "classification";
}

Task task_from_string(const std::string& s) {
    if (s == "regression" || s == "reg") return Task::Regression;
    if (s == "classification" || s == "cls") return Task::Classification;
    throw ConfigError("unknown task '" + s + "' (expected regression or classification)");
}

std::vector<double> Standardization::transform_features(std::span<const double> raw) const {
    std::vector<double> out(raw.begin(), raw.end());
    if (!active) return out;
    for (size_t j = 0; j < out.size(); ++j)
        out[j] = (out[j] - feature_mean[j]) / feature_std[j];
    return out;
}

double Standardization::destandardize_target(double v) const {
    if (!active) return v;
    return v * target_std + target_mean;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, int row, int col) {
    size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw DataError("parse error at row " + std::to_string(row) + ", column " +
                        std::to_string(col) + ": '" + cell + "' is not a number");
    }
    if (consumed != cell.size())
        throw DataError("parse error at row " + std::to_string(row) + ", column " +
                        std::to_string(col) + ": trailing characters in '" + cell + "'");
    if (!std::isfinite(v))
        throw DataError("non-finite value at row " + std::to_string(row) + ", column " +
                        std::to_string(col));
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column, Task task) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(f, line)) throw DataError("'" + path + "' is empty");
    const std::vector<std::string> header = split_line(line);

    int target_idx = -1;
    for (size_t j = 0; j < header.size(); ++j)
        if (trim(header[j]) == target_column) target_idx = static_cast<int>(j);
    if (target_idx < 0)
        throw DataError("unknown target column '" + target_column + "'");
    const int p = static_cast<int>(header.size()) - 1;
    if (p < 1) throw DataError("dataset needs at least one feature column");

    Dataset ds;
    ds.task = task;
    ds.target_name = trim(header[target_idx]);
    for (size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != target_idx) ds.feature_names.push_back(trim(header[j]));

    std::vector<double> xdata;
    std::vector<double> ydata;
    int row = 0;
    while (std::getline(f, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        for (size_t j = 0; j < cells.size(); ++j) {
            const std::string cell = trim(cells[j]);
            if (cell.empty())
                throw DataError("missing value at row " + std::to_string(row) +
                                ", column " + std::to_string(j + 1));
            if (static_cast<int>(j) == target_idx) {
                if (task == Task::Regression) {
                    ydata.push_back(parse_number(cell, row, static_cast<int>(j) + 1));
                } else {
                    auto it = std::find(ds.class_labels.begin(), ds.class_labels.end(), cell);
                    if (it == ds.class_labels.end()) {
                        ds.class_labels.push_back(cell);
                        ydata.push_back(static_cast<double>(ds.class_labels.size() - 1));
                    } else {
                        ydata.push_back(static_cast<double>(it - ds.class_labels.begin()));
                    }
                }
            } else {
                xdata.push_back(parse_number(cell, row, static_cast<int>(j) + 1));
            }
        }
    }
    if (row == 0) throw DataError("'" + path + "' has no data rows");

    ds.x = Matrix(row, p);
    std::copy(xdata.begin(), xdata.end(), ds.x.data().begin());
    ds.y = Matrix(row, 1);
    std::copy(ydata.begin(), ydata.end(), ds.y.data().begin());
    return ds;
}

void standardize(Dataset& ds) {
    const Moments fm = fit_moments(ds.x);
    apply_moments(ds.x, fm);
    ds.stand.active = true;
    ds.stand.feature_mean = fm.mean;
    ds.stand.feature_std = fm.std;
    if (ds.task == Task::Regression) {
        const Moments tm = fit_moments(ds.y);
        apply_moments(ds.y, tm);
        ds.stand.target_mean = tm.mean[0];
        ds.stand.target_std = tm.std[0];
    }
}

SplitResult split(const Dataset& ds, std::uint64_t seed) {
    const int n = ds.n();
    if (n < 20) throw DataError("split needs at least 20 rows, got " + std::to_string(n));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const int n_train = static_cast<int>(std::floor(0.65 * n));
    const int n_val = static_cast<int>(std::floor(0.05 * n));

    auto take = [&](int begin, int count) {
        Dataset out = ds;
        out.x = Matrix(count, ds.p());
        out.y = Matrix(count, ds.y.cols());
        for (int i = 0; i < count; ++i) {
            const int src = order[begin + i];
            for (int j = 0; j < ds.p(); ++j) out.x(i, j) = ds.x(src, j);
            for (int j = 0; j < ds.y.cols(); ++j) out.y(i, j) = ds.y(src, j);
        }
        return out;
    };

    SplitResult r;
    r.train = take(0, n_train);
    r.val = take(n_train, n_val);
    r.test = take(n_train + n_val, n - n_train - n_val);
    return r;
}

}  // namespace cofrnet
