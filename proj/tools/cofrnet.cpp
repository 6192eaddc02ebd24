// Command-line front end: training, evaluation, interpretation, polynomial
// encoding and the synthetic benchmark.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cofrnet/bench.hpp"
#include "cofrnet/continuants.hpp"
#include "cofrnet/core.hpp"
#include "cofrnet/dataset.hpp"
#include "cofrnet/json_io.hpp"
#include "cofrnet/poly_encoder.hpp"
#include "cofrnet/series.hpp"
#include "cofrnet/training.hpp"

using namespace cofrnet;

namespace {

std::vector<int> parse_depths(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("bad depth list entry '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty depth list");
    return out;
}

std::string last_column_of(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw DataError("cannot open '" + csv_path + "'");
    std::string header;
    if (!std::getline(f, header)) throw DataError("'" + csv_path + "' is empty");
    const size_t pos = header.find_last_of(',');
    std::string name = pos == std::string::npos ? header : header.substr(pos + 1);
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    return name;
}

// Maps a freshly loaded dataset's class indices onto the label order stored
// in the model file.
void remap_classes(Dataset& ds, const std::vector<std::string>& model_labels) {
    for (int i = 0; i < ds.n(); ++i) {
        const std::string& label = ds.class_labels[static_cast<int>(ds.y(i, 0))];
        const auto it = std::find(model_labels.begin(), model_labels.end(), label);
        if (it == model_labels.end())
            throw DataError("label '" + label + "' was not seen during training");
        ds.y(i, 0) = static_cast<double>(it - model_labels.begin());
    }
}

std::vector<double> dataset_row(const Dataset& ds, int i) {
    std::vector<double> row(ds.p());
    for (int j = 0; j < ds.p(); ++j) row[j] = ds.x(i, j);
    return row;
}

struct Metrics {
    double mse = 0.0;
    double mape_pct = 0.0;
    double accuracy = 0.0;
};

Metrics evaluate_model(const ModelFile& mf, const Dataset& raw) {
    Metrics m;
    if (mf.task == Task::Regression) {
        std::vector<double> pred(raw.n()), target(raw.n());
        for (int i = 0; i < raw.n(); ++i) {
            pred[i] = predict_raw(mf, dataset_row(raw, i))[0];
            target[i] = raw.y(i, 0);
            const double d = pred[i] - target[i];
            m.mse += d * d;
        }
        m.mse /= std::max(1, raw.n());
        m.mape_pct = mape(pred, target);
    } else {
        int correct = 0;
        for (int i = 0; i < raw.n(); ++i) {
            const std::vector<double> out = predict_raw(mf, dataset_row(raw, i));
            const int pred = static_cast<int>(
                std::max_element(out.begin(), out.end()) - out.begin());
            if (pred == static_cast<int>(raw.y(i, 0))) ++correct;
        }
        m.accuracy = static_cast<double>(correct) / std::max(1, raw.n());
    }
    return m;
}

SparsePoly read_poly_argument(const std::string& arg) {
    std::string text = arg;
    std::ifstream f(arg);
    if (f) {
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    const size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("bad polynomial JSON: ") + e.what());
        }
        return poly_from_json(j);
    }
    return poly_from_text(text);
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw Error("cannot open '" + path + "' for writing");
    return file;
}

// ---------------------------------------------------------------------------

int cmd_train(const std::string& data_path, std::string target, const std::string& task_s,
              const std::string& variant_s, const std::string& depths_s, int full_ladders,
              double epsilon, std::uint64_t seed, double lr, double weight_decay,
              int batch, int epochs, int patience, double dropout,
              const std::string& out_path, const std::string& history_path) {
    if (target.empty()) target = last_column_of(data_path);
    const Task task = task_from_string(task_s);
    Dataset ds = load_csv(data_path, target, task);
    standardize(ds);
    const SplitResult parts = split(ds, seed);

    const int q = task == Task::Classification ? ds.num_classes() : 1;
    if (task == Task::Classification && q < 2)
        throw DataError("classification needs at least two classes");

    CoFrNetModel model = init_model(variant_from_string(variant_s), ds.p(), q,
                                    parse_depths(depths_s), full_ladders, seed);
    TrainConfig cfg;
    cfg.loss = task == Task::Classification ? Loss::SoftmaxCrossEntropy
                                            : Loss::SquaredError;
    cfg.learning_rate = lr;
    cfg.weight_decay = weight_decay;
    cfg.batch_size = batch;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.dropout = dropout;
    cfg.seed = seed + 1;
    cfg.epsilon = epsilon;

    const TrainResult result =
        train(std::move(model), parts.train.x, parts.train.y, parts.val.x, parts.val.y, cfg);

    ModelFile mf;
    mf.model = result.model;
    mf.stand = ds.stand;
    mf.task = task;
    mf.class_labels = ds.class_labels;
    save_model(out_path, mf);
    if (!history_path.empty()) write_history_csv(history_path, result.history);

    if (!result.history.empty()) {
        const EpochStats& last = result.history.back();
        std::printf("epochs=%zu best_epoch=%d val_loss=%.6g val_metric=%.6g\n",
                    result.history.size(), result.best_epoch, last.val_loss,
                    last.val_metric);
    }
    // held-out figure on the raw test rows, with preprocessing replayed
    Dataset test_raw = parts.test;
    for (int i = 0; i < test_raw.n(); ++i)
        for (int j = 0; j < test_raw.p(); ++j)
            test_raw.x(i, j) = test_raw.x(i, j) * ds.stand.feature_std[j] +
                               ds.stand.feature_mean[j];
    if (task == Task::Regression)
        for (int i = 0; i < test_raw.n(); ++i)
            test_raw.y(i, 0) = ds.stand.destandardize_target(test_raw.y(i, 0));
    const Metrics tm = evaluate_model(mf, test_raw);
    if (task == Task::Regression)
        std::printf("test_mse=%.6g test_mape=%.6g\n", tm.mse, tm.mape_pct);
    else
        std::printf("test_accuracy=%.4f\n", tm.accuracy);
    std::printf("saved %s\n", out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             std::string target) {
    const ModelFile mf = load_model(model_path);
    if (target.empty()) target = last_column_of(data_path);
    Dataset ds = load_csv(data_path, target, mf.task);
    if (mf.task == Task::Classification) remap_classes(ds, mf.class_labels);
    const Metrics m = evaluate_model(mf, ds);
    if (mf.task == Task::Regression)
        std::printf("mse=%.6g mape=%.6g\n", m.mse, m.mape_pct);
    else
        std::printf("accuracy=%.4f\n", m.accuracy);
    return 0;
}

int cmd_interpret_ic(const std::string& model_path, const std::string& data_path,
                     std::string target, int row, const std::string& out_path) {
    const ModelFile mf = load_model(model_path);
    if (target.empty()) target = last_column_of(data_path);
    Dataset ds = load_csv(data_path, target, mf.task);

    std::ofstream file;
    std::ostream& os = open_or_stdout(file, out_path);
    os << "row,output";
    for (const std::string& name : ds.feature_names) os << ',' << name;
    os << ",clamped\n";
    os.precision(10);

    const int begin = row >= 0 ? row : 0;
    const int end = row >= 0 ? row + 1 : ds.n();
    if (begin < 0 || end > ds.n()) throw DataError("row index out of range");
    for (int i = begin; i < end; ++i) {
        const std::vector<double> x = mf.stand.transform_features(dataset_row(ds, i));
        const AttributionResult att = ic_model_attribution(mf.model, x);
        for (int j = 0; j < mf.model.output_dim; ++j) {
            os << i << ',' << j;
            for (int f = 0; f < mf.model.input_dim; ++f) {
                // chain rule through preprocessing: gradient in raw units
                double g = att.ddx(f, j);
                if (mf.stand.active) g /= mf.stand.feature_std[f];
                if (mf.task == Task::Regression && mf.stand.active)
                    g *= mf.stand.target_std;
                os << ',' << g;
            }
            os << ',' << (att.clamped ? 1 : 0) << '\n';
        }
    }
    return 0;
}

int cmd_interpret_ips(const std::string& model_path, int degree,
                      const std::string& center_mode, int top_k,
                      const std::string& out_path) {
    const ModelFile mf = load_model(model_path);
    int max_depth = 0;
    for (const Ladder& l : mf.model.ladders) max_depth = std::max(max_depth, l.depth);
    const int D = degree > 0 ? degree : std::max(1, max_depth);

    // the model acts on standardized inputs, where the training-data mean is
    // the origin; "mean" therefore only differs for unstandardized models
    std::vector<double> center(mf.model.input_dim, 0.0);
    if (center_mode == "mean" && !mf.stand.active && !mf.stand.feature_mean.empty())
        center = mf.stand.feature_mean;
    else if (center_mode != "zero" && center_mode != "mean")
        throw ConfigError("--center must be 'zero' or 'mean'");

    std::vector<MultiSeries> all = model_to_series(mf.model, D, center);
    if (mf.task == Task::Regression && mf.stand.active)
        for (MultiSeries& s : all)
            s = series_affine_output(s, mf.stand.target_std, mf.stand.target_mean);

    for (size_t out = 0; out < all.size(); ++out) {
        if (all.size() > 1) std::printf("output %zu\n", out);
        std::printf("%-4s %-16s %14s %12s\n", "rank", "term", "coefficient",
                    "normalized");
        const std::vector<SeriesTerm> top = series_report(all[out], top_k);
        for (size_t i = 0; i < top.size(); ++i)
            std::printf("%-4zu %-16s %14.6g %12.4f\n", i + 1,
                        format_monomial(top[i].exponents).c_str(), top[i].coefficient,
                        top[i].normalized);
    }

    if (!out_path.empty()) {
        nlohmann::json j;
        j["schema_version"] = 1;
        nlohmann::json arr = nlohmann::json::array();
        for (const MultiSeries& s : all) arr.push_back(series_to_json(s));
        j["series"] = std::move(arr);
        std::ofstream f(out_path);
        if (!f) throw Error("cannot open '" + out_path + "' for writing");
        f << j.dump(2) << '\n';
        std::printf("saved %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_shape(const std::string& model_path, int feature, int grid,
              const std::string& out_path) {
    const ModelFile mf = load_model(model_path);
    if (feature < 0 || feature >= mf.model.input_dim)
        throw ConfigError("feature index out of range");
    if (grid < 2) throw ConfigError("grid needs at least 2 points");

    std::vector<int> curves;
    for (int l = 0; l < mf.model.num_ladders(); ++l)
        if (mf.model.ladders[l].is_singleton() &&
            mf.model.ladders[l].feature_mask[0] == feature)
            curves.push_back(l);
    if (curves.empty())
        throw ConfigError("no single-feature ladder covers feature " +
                          std::to_string(feature));

    const double mean = mf.stand.active ? mf.stand.feature_mean[feature] : 0.0;
    const double sd = mf.stand.active ? mf.stand.feature_std[feature] : 1.0;
    const double lo = mean - 3.0 * sd;
    const double hi = mean + 3.0 * sd;

    std::ofstream file;
    std::ostream& os = open_or_stdout(file, out_path);
    os << "x";
    for (int j = 0; j < mf.model.output_dim; ++j) os << ",f_" << j;
    os << '\n';
    os.precision(12);

    for (int g = 0; g < grid; ++g) {
        const double x_raw = lo + (hi - lo) * g / (grid - 1);
        const double x_std = (x_raw - mean) / sd;
        std::vector<double> x(mf.model.input_dim, 0.0);
        x[feature] = x_std;
        os << x_raw;
        for (int j = 0; j < mf.model.output_dim; ++j) {
            double v = 0.0;
            for (int l : curves)
                v += mf.model.mixing(l, j) *
                     ladder_eval(mf.model.ladders[l], x, mf.model.epsilon);
            os << ',' << v;
        }
        os << '\n';
    }
    return 0;
}

int cmd_encode(const std::string& poly_arg, int verify_trials, double box,
               std::uint64_t seed, const std::string& out_path) {
    const SparsePoly poly = read_poly_argument(poly_arg);
    const std::vector<SignedGcf> enc = encode_poly(poly);

    VerifyResult vr;
    const bool verified = verify_trials > 0;
    if (verified) vr = verify_encoding(poly, enc, verify_trials, box, seed);

    std::printf("variables=%d monomials=%zu ladders=%zu\n", poly.num_vars,
                poly.monomials.size(), enc.size());
    if (verified)
        std::printf("verify: max_rel_error=%.3e accepted=%d skipped=%d\n",
                    vr.max_rel_error, vr.accepted, vr.skipped);

    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw Error("cannot open '" + out_path + "' for writing");
        f << encoding_to_json(enc, verified ? &vr : nullptr).dump(2) << '\n';
        std::printf("saved %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_bench(const std::string& only_s, std::uint64_t seed, const std::string& out_path,
              const std::string& json_path) {
    std::vector<std::string> only;
    if (!only_s.empty()) {
        std::stringstream ss(only_s);
        std::string item;
        while (std::getline(ss, item, ',')) only.push_back(item);
    }

    const std::vector<BenchResult> results = run_benchmarks(only, seed);
    const std::string csv = report_csv(results);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream f(out_path);
        if (!f) throw Error("cannot open '" + out_path + "' for writing");
        f << csv;
        std::printf("saved %s\n", out_path.c_str());
    }

    if (!json_path.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const BenchResult& r : results) {
            arr.push_back({{"function", r.function},
                           {"cofrnet_mape", r.cofrnet_mape},
                           {"mlp_mape", r.mlp_mape},
                           {"cofrnet_mape_resample", r.cofrnet_mape_resample},
                           {"mlp_mape_resample", r.mlp_mape_resample},
                           {"seed", r.seed},
                           {"depth", r.depth},
                           {"mlp_width", r.mlp_width},
                           {"cofrnet_params", r.cofrnet_params},
                           {"mlp_params", r.mlp_params},
                           {"cofrnet_diverged", r.cofrnet_diverged},
                           {"mlp_diverged", r.mlp_diverged},
                           {"mlp_activation", r.mlp_activation}});
        }
        std::ofstream f(json_path);
        if (!f) throw Error("cannot open '" + json_path + "' for writing");
        f << arr.dump(2) << '\n';
        std::printf("saved %s\n", json_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continued-fraction ladder networks: train, interpret, encode, benchmark"};
    app.require_subcommand(1);

    std::string data_path, target, task_s = "regression", variant_s = "f";
    std::string depths_s = "6", out_path, history_path, model_path;
    int full_ladders = 8;
    double epsilon = 0.1, lr = 1e-3, weight_decay = 1e-4, dropout = 0.0;
    int batch = 64, epochs = 200, patience = 20;
    std::uint64_t seed = 0;

    CLI::App* train_cmd = app.add_subcommand("train", "fit a model on a CSV dataset");
    train_cmd->add_option("--data", data_path, "CSV file with a header row")->required();
    train_cmd->add_option("--target", target, "target column (default: last column)");
    train_cmd->add_option("--task", task_s, "regression or classification");
    train_cmd->add_option("--variant", variant_s, "f, d or dl");
    train_cmd->add_option("--depths", depths_s,
                          "comma list: per ladder (f) or per feature (d, dl)");
    train_cmd->add_option("--full-ladders", full_ladders,
                          "extra full ladders of depth 2,3,... (dl only)");
    train_cmd->add_option("--epsilon", epsilon, "pole-safety threshold");
    train_cmd->add_option("--seed", seed, "rng seed");
    train_cmd->add_option("--lr", lr, "learning rate");
    train_cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
    train_cmd->add_option("--batch", batch, "mini-batch size");
    train_cmd->add_option("--epochs", epochs, "maximum epochs");
    train_cmd->add_option("--patience", patience, "early-stopping patience");
    train_cmd->add_option("--dropout", dropout, "whole-ladder dropout probability");
    std::string train_out = "model.json";
    train_cmd->add_option("--out", train_out, "model file to write");
    train_cmd->add_option("--history", history_path, "training history CSV");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a CSV");
    eval_cmd->add_option("--model", model_path, "model file")->required();
    eval_cmd->add_option("--data", data_path, "CSV file")->required();
    eval_cmd->add_option("--target", target, "target column (default: last column)");

    CLI::App* interp = app.add_subcommand("interpret", "model interpretation");
    interp->require_subcommand(1);
    int row = -1, degree = 0, top_k = 10, grid = 200, feature = 0;
    std::string center_mode = "zero";

    CLI::App* ic_cmd = interp->add_subcommand("ic", "per-example input gradients");
    ic_cmd->add_option("--model", model_path, "model file")->required();
    ic_cmd->add_option("--data", data_path, "CSV file")->required();
    ic_cmd->add_option("--target", target, "target column (default: last column)");
    ic_cmd->add_option("--row", row, "single row index (default: all rows)");
    ic_cmd->add_option("--out", out_path, "output CSV (default: stdout)");

    CLI::App* ips_cmd =
        interp->add_subcommand("ips", "global power-series interpretation");
    ips_cmd->add_option("--model", model_path, "model file")->required();
    ips_cmd->add_option("--degree", degree, "total degree (default: max ladder depth)");
    ips_cmd->add_option("--center", center_mode, "expansion center: zero or mean");
    ips_cmd->add_option("--top", top_k, "terms to print");
    ips_cmd->add_option("--out", out_path, "series JSON file");

    CLI::App* shape_cmd =
        app.add_subcommand("shape", "single-feature curve of a diagonalized ladder");
    shape_cmd->add_option("--model", model_path, "model file")->required();
    shape_cmd->add_option("--feature", feature, "feature index (0-based)")->required();
    shape_cmd->add_option("--grid", grid, "number of grid points");
    shape_cmd->add_option("--out", out_path, "output CSV (default: stdout)");

    std::string poly_arg;
    int verify_trials = 1000;
    double box = 1.0;
    CLI::App* encode_cmd =
        app.add_subcommand("encode", "compile a polynomial into exact ladders");
    encode_cmd
        ->add_option("--poly", poly_arg,
                     "inline JSON, file, or expression like '2*x1^2*x2 - 0.5*x2'")
        ->required();
    encode_cmd->add_option("--verify", verify_trials, "verification samples (0 disables)");
    encode_cmd->add_option("--box", box, "verification box half-width");
    encode_cmd->add_option("--seed", seed, "verification rng seed");
    encode_cmd->add_option("--out", out_path, "ladder JSON file");

    std::string only_s, json_path;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "synthetic-function benchmark vs matched MLP");
    bench_cmd->add_option("--only", only_s, "comma list of function keys");
    bench_cmd->add_option("--seed", seed, "rng seed");
    bench_cmd->add_option("--out", out_path, "report CSV (default: stdout)");
    bench_cmd->add_option("--json", json_path, "report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (train_cmd->parsed())
            return cmd_train(data_path, target, task_s, variant_s, depths_s, full_ladders,
                             epsilon, seed, lr, weight_decay, batch, epochs, patience,
                             dropout, train_out, history_path);
        if (eval_cmd->parsed()) return cmd_eval(model_path, data_path, target);
        if (interp->parsed()) {
            if (ic_cmd->parsed())
                return cmd_interpret_ic(model_path, data_path, target, row, out_path);
            return cmd_interpret_ips(model_path, degree, center_mode, top_k, out_path);
        }
        if (shape_cmd->parsed()) return cmd_shape(model_path, feature, grid, out_path);
        if (encode_cmd->parsed())
            return cmd_encode(poly_arg, verify_trials, box, seed, out_path);
        if (bench_cmd->parsed()) return cmd_bench(only_s, seed, out_path, json_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
