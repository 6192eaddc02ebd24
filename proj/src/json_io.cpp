#include "cofrnet/json_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace cofrnet {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw Error("model file: expected a matrix");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw Error("model file: ragged matrix rows");
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

json model_to_json(const ModelFile& mf) {
    const CoFrNetModel& m = mf.model;
    json j;
    j["schema_version"] = 1;
    j["variant"] = to_string(m.variant);
    j["p"] = m.input_dim;
    j["q"] = m.output_dim;
    j["epsilon"] = m.epsilon;

    json ladders = json::array();
    for (const Ladder& l : m.ladders) {
        json lj;
        lj["depth"] = l.depth;
        lj["mask"] = l.feature_mask;
        lj["weights"] = matrix_to_json(l.weights);
        ladders.push_back(std::move(lj));
    }
    j["ladders"] = std::move(ladders);
    j["mixing"] = matrix_to_json(m.mixing);
    j["output_bias"] = m.output_bias;

    json st;
    st["active"] = mf.stand.active;
    st["feature_mean"] = mf.stand.feature_mean;
    st["feature_std"] = mf.stand.feature_std;
    st["target_mean"] = mf.stand.target_mean;
    st["target_std"] = mf.stand.target_std;
    st["task"] = to_string(mf.task);
    st["class_labels"] = mf.class_labels;
    j["standardization"] = std::move(st);
    return j;
}

ModelFile model_from_json(const json& j) {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw Error("model file: unsupported schema version");

    ModelFile mf;
    CoFrNetModel& m = mf.model;
    m.variant = variant_from_string(j.at("variant").get<std::string>());
    m.input_dim = j.at("p").get<int>();
    m.output_dim = j.at("q").get<int>();
    m.epsilon = j.at("epsilon").get<double>();

    for (const json& lj : j.at("ladders")) {
        Ladder l;
        l.depth = lj.at("depth").get<int>();
        l.feature_mask = lj.at("mask").get<std::vector<int>>();
        l.weights = matrix_from_json(lj.at("weights"));
        m.ladders.push_back(std::move(l));
    }
    m.mixing = matrix_from_json(j.at("mixing"));
    m.output_bias = j.at("output_bias").get<std::vector<double>>();

    const json& st = j.at("standardization");
    mf.stand.active = st.at("active").get<bool>();
    mf.stand.feature_mean = st.at("feature_mean").get<std::vector<double>>();
    mf.stand.feature_std = st.at("feature_std").get<std::vector<double>>();
    mf.stand.target_mean = st.at("target_mean").get<double>();
    mf.stand.target_std = st.at("target_std").get<double>();
    mf.task = task_from_string(st.at("task").get<std::string>());
    mf.class_labels = st.at("class_labels").get<std::vector<std::string>>();

    m.validate();
    return mf;
}

void save_model(const std::string& path, const ModelFile& mf) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open model file '" + path + "' for writing");
    f << model_to_json(mf).dump(2) << '\n';
}

ModelFile load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open model file '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw Error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

std::vector<double> predict_raw(const ModelFile& mf, std::span<const double> x_raw) {
    const std::vector<double> x = mf.stand.transform_features(x_raw);
    std::vector<double> out = model_eval(mf.model, x);
    if (mf.task == Task::Regression)
        for (double& v : out) v = mf.stand.destandardize_target(v);
    return out;
}

json series_to_json(const MultiSeries& s) {
    json j;
    j["num_vars"] = s.num_vars();
    j["max_degree"] = s.max_degree();
    j["center"] = s.center();
    json terms = json::array();
    for (const auto& [e, c] : s.terms()) {
        json t;
        t["exponents"] = e;
        t["coefficient"] = c;
        terms.push_back(std::move(t));
    }
    j["terms"] = std::move(terms);
    return j;
}

SparsePoly poly_from_json(const json& j) {
    SparsePoly poly;
    poly.constant = j.value("constant", 0.0);
    if (j.contains("monomials")) {
        for (const json& mj : j.at("monomials")) {
            Monomial m;
            m.coeff = mj.at("coeff").get<double>();
            m.dirs = mj.at("dirs").get<std::vector<std::vector<double>>>();
            poly.monomials.push_back(std::move(m));
        }
    }
    int p = 0;
    for (const Monomial& m : poly.monomials)
        for (const std::vector<double>& u : m.dirs)
            p = std::max(p, static_cast<int>(u.size()));
    poly.num_vars = std::max(p, 1);
    poly.validate();
    return poly;
}

namespace {

class PolyParser {
public:
    explicit PolyParser(const std::string& text) : text_(text) {}

    SparsePoly parse(int num_vars) {
        SparsePoly poly;
        int max_var = 0;

        skip_ws();
        bool first = true;
        while (pos_ < text_.size()) {
            double sign = 1.0;
            if (peek() == '+' || peek() == '-') {
                sign = (take() == '-') ? -1.0 : 1.0;
                skip_ws();
            } else if (!first) {
                fail("expected '+' or '-' between terms");
            }
            parse_term(sign, poly, max_var);
            skip_ws();
            first = false;
        }
        if (first) fail("empty polynomial");

        poly.num_vars = num_vars > 0 ? num_vars : std::max(max_var, 1);
        if (num_vars > 0 && max_var > num_vars)
            fail("variable index exceeds the requested dimension");
        for (Monomial& m : poly.monomials)
            for (std::vector<double>& u : m.dirs) u.resize(poly.num_vars, 0.0);
        poly.validate();
        return poly;
    }

private:
    const std::string& text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error("polynomial parse error at offset " + std::to_string(pos_) + ": " + msg);
    }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    char take() { return text_[pos_++]; }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    double parse_number() {
        size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(pos_), &consumed);
        } catch (const std::exception&) {
            fail("expected a number");
        }
        pos_ += consumed;
        return v;
    }

    int parse_int() {
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected an integer");
        int v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (take() - '0');
        return v;
    }

    // factor*factor*...; numeric factors multiply the coefficient, variable
    // factors append unit directions (one per power).
    void parse_term(double sign, SparsePoly& poly, int& max_var) {
        double coeff = sign;
        std::vector<int> var_powers;  // flattened list of variable indices

        while (true) {
            skip_ws();
            if (peek() == 'x' || peek() == 'X') {
                take();
                const int idx = parse_int();
                if (idx < 1) fail("variable indices start at x1");
                max_var = std::max(max_var, idx);
                int power = 1;
                if (peek() == '^') {
                    take();
                    power = parse_int();
                    if (power < 1) fail("powers must be at least 1");
                }
                for (int i = 0; i < power; ++i) var_powers.push_back(idx - 1);
            } else if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
                coeff *= parse_number();
            } else {
                fail("expected a number or a variable");
            }
            skip_ws();
            if (peek() == '*') {
                take();
                continue;
            }
            break;
        }

        if (var_powers.empty()) {
            poly.constant += coeff;
            return;
        }
        Monomial m;
        m.coeff = coeff;
        for (int idx : var_powers) {
            std::vector<double> u(static_cast<size_t>(idx) + 1, 0.0);
            u[idx] = 1.0;
            m.dirs.push_back(std::move(u));
        }
        poly.monomials.push_back(std::move(m));
    }
};

}  // namespace

SparsePoly poly_from_text(const std::string& text, int num_vars) {
    return PolyParser(text).parse(num_vars);
}

json encoding_to_json(std::span<const SignedGcf> enc, const VerifyResult* verify) {
    json j;
    json terms = json::array();
    for (const SignedGcf& sg : enc) {
        json t;
        t["sign"] = sg.sign;
        json g;
        g["depth"] = sg.gcf.depth;
        json nums = json::array();
        for (const AffineFunctional& f : sg.gcf.numerators)
            nums.push_back({{"v", f.v}, {"alpha", f.b}});
        g["numerators"] = std::move(nums);
        json dens = json::array();
        for (const AffineFunctional& f : sg.gcf.denominators)
            dens.push_back({{"w", f.v}, {"beta", f.b}});
        g["denominators"] = std::move(dens);
        t["gcf"] = std::move(g);
        terms.push_back(std::move(t));
    }
    j["ladders"] = std::move(terms);
    j["ladder_count"] = enc.size();
    if (verify) {
        j["verify"] = {{"max_rel_error", verify->max_rel_error},
                       {"accepted", verify->accepted},
                       {"skipped", verify->skipped}};
    }
    return j;
}

}  // namespace cofrnet
