#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cofrnet/core.hpp"
#include "cofrnet/dataset.hpp"
#include "cofrnet/poly_encoder.hpp"
#include "cofrnet/series.hpp"

namespace cofrnet {

/// Everything a saved model carries: the network itself plus the
/// preprocessing needed to evaluate raw rows.
struct ModelFile {
    CoFrNetModel model;
    Standardization stand;
    Task task = Task::Regression;
    std::vector<std::string> class_labels;
};

nlohmann::json model_to_json(const ModelFile& mf);
ModelFile model_from_json(const nlohmann::json& j);

/// Round-trips evaluation bit-exactly (doubles are emitted with enough
/// digits to reparse to the same bits).
void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

/// Standardize raw features, run the model, and (for regression) map the
/// outputs back to target units.
std::vector<double> predict_raw(const ModelFile& mf, std::span<const double> x_raw);

nlohmann::json series_to_json(const MultiSeries& s);

/// {"constant": c0, "monomials": [{"coeff": c, "dirs": [[...], ...]}]}.
SparsePoly poly_from_json(const nlohmann::json& j);

/// Textual sugar like "2*x1^2*x2 - 0.5*x2 + 3"; variables are x1..xp and
/// every power becomes a repeated unit direction vector. `num_vars` <= 0
/// infers the dimension from the largest index used.
SparsePoly poly_from_text(const std::string& text, int num_vars = 0);

nlohmann::json encoding_to_json(std::span<const SignedGcf> enc, const VerifyResult* verify);

}  // namespace cofrnet
