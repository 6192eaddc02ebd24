#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cofrnet/dataset.hpp"
#include "cofrnet/json_io.hpp"
#include "cofrnet/training.hpp"
#include "oracles.hpp"

using namespace cofrnet;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path((std::filesystem::temp_directory_path() / name).string()) {
        std::ofstream f(path);
        f << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

Dataset make_dataset(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Dataset ds;
    ds.task = Task::Regression;
    ds.x = Matrix(n, p);
    ds.y = Matrix(n, 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) ds.x(i, j) = unif(rng);
        ds.y(i, 0) = unif(rng);
    }
    for (int j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
    ds.target_name = "y";
    return ds;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("csv ingestion") {
    SUBCASE("regression happy path") {
        TempFile f("cofrnet_t1.csv", "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n");
        const Dataset ds = load_csv(f.path, "y", Task::Regression);
        CHECK(ds.n() == 3);
        CHECK(ds.p() == 2);
        CHECK(ds.x(1, 1) == 5.0);
        CHECK(ds.y(2, 0) == 9.0);
        CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});
    }
    SUBCASE("classification labels map by first appearance") {
        TempFile f("cofrnet_t2.csv", "a,label\n1,cat\n2,dog\n3,cat\n");
        const Dataset ds = load_csv(f.path, "label", Task::Classification);
        CHECK(ds.class_labels == std::vector<std::string>{"cat", "dog"});
        CHECK(ds.y(0, 0) == 0.0);
        CHECK(ds.y(1, 0) == 1.0);
        CHECK(ds.y(2, 0) == 0.0);
    }
    SUBCASE("missing value names the row") {
        TempFile f("cofrnet_t3.csv", "a,b,y\n1,,3\n");
        try {
            load_csv(f.path, "y", Task::Regression);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        }
    }
    SUBCASE("unknown target column") {
        TempFile f("cofrnet_t4.csv", "a,b\n1,2\n");
        CHECK_THROWS_AS(load_csv(f.path, "y", Task::Regression), DataError);
    }
    SUBCASE("malformed number carries row and column") {
        TempFile f("cofrnet_t5.csv", "a,y\n1,2\nbad,4\n");
        try {
            load_csv(f.path, "y", Task::Regression);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("row 2") != std::string::npos);
            CHECK(msg.find("column 1") != std::string::npos);
        }
    }
    SUBCASE("non-finite entries are rejected") {
        TempFile f("cofrnet_t6.csv", "a,y\ninf,2\n");
        CHECK_THROWS_AS(load_csv(f.path, "y", Task::Regression), DataError);
    }
}

TEST_CASE("standardization by task") {
    TempFile f("cofrnet_t7.csv", "a,y\n1,10\n2,20\n3,30\n4,40\n");
    SUBCASE("regression standardizes features and targets") {
        Dataset ds = load_csv(f.path, "y", Task::Regression);
        standardize(ds);
        CHECK(ds.stand.active);
        CHECK(ds.stand.target_mean == doctest::Approx(25.0));
        double xm = 0.0, ym = 0.0;
        for (int i = 0; i < ds.n(); ++i) {
            xm += ds.x(i, 0);
            ym += ds.y(i, 0);
        }
        CHECK(std::fabs(xm) < 1e-12);
        CHECK(std::fabs(ym) < 1e-12);
    }
    SUBCASE("classification leaves class indices untouched") {
        TempFile g("cofrnet_t8.csv", "a,lab\n1,u\n2,v\n3,u\n4,v\n");
        Dataset ds = load_csv(g.path, "lab", Task::Classification);
        standardize(ds);
        CHECK(ds.y(0, 0) == 0.0);
        CHECK(ds.y(1, 0) == 1.0);
        CHECK(ds.stand.target_mean == 0.0);
        CHECK(ds.stand.target_std == 1.0);
    }
}

TEST_CASE("split sizes and determinism") {
    SUBCASE("N = 100 gives 65/5/30") {
        const Dataset ds = make_dataset(100, 2, 1);
        const SplitResult r = split(ds, 7);
        CHECK(r.train.n() == 65);
        CHECK(r.val.n() == 5);
        CHECK(r.test.n() == 30);
    }
    SUBCASE("N = 20 gives 13/1/6") {
        const Dataset ds = make_dataset(20, 2, 2);
        const SplitResult r = split(ds, 7);
        CHECK(r.train.n() == 13);
        CHECK(r.val.n() == 1);
        CHECK(r.test.n() == 6);
    }
    SUBCASE("too few rows") {
        const Dataset ds = make_dataset(19, 2, 3);
        CHECK_THROWS_AS(split(ds, 0), DataError);
    }
    SUBCASE("same seed, same partition; rows are a permutation") {
        const Dataset ds = make_dataset(50, 3, 4);
        const SplitResult a = split(ds, 99);
        const SplitResult b = split(ds, 99);
        CHECK(a.train.x.data() == b.train.x.data());
        CHECK(a.test.y.data() == b.test.y.data());

        double sum = 0.0, expect = 0.0;
        for (int i = 0; i < ds.n(); ++i) expect += ds.y(i, 0);
        for (const Dataset* part : {&a.train, &a.val, &a.test})
            for (int i = 0; i < part->n(); ++i) sum += part->y(i, 0);
        CHECK(sum == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("train fraction stays near 0.65") {
        for (int n : {100, 123, 311, 1000}) {
            const Dataset ds = make_dataset(n, 1, n);
            const SplitResult r = split(ds, 1);
            const double frac = static_cast<double>(r.train.n()) / n;
            CHECK(frac >= 0.64);
            CHECK(frac <= 0.66);
        }
    }
}

TEST_CASE("model file round trip is evaluation-exact") {
    std::mt19937_64 rng(163);
    ModelFile mf;
    mf.model = init_model(Variant::DL, 3, 2, {2}, 2, 31);
    // make the weights arbitrary, not just the init distribution
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> params = flatten_params(mf.model);
    for (double& v : params) v = unif(rng);
    // keep masked columns zero
    unflatten_params(mf.model, params);
    for (int l = 0; l < 3; ++l)
        for (int k = 0; k <= mf.model.ladders[l].depth; ++k)
            for (int j = 0; j < 3; ++j)
                if (j != l) mf.model.ladders[l].weights(k, j) = 0.0;
    mf.stand.active = true;
    mf.stand.feature_mean = {0.1, -0.2, 0.3};
    mf.stand.feature_std = {1.1, 0.9, 2.0};
    mf.task = Task::Classification;
    mf.class_labels = {"no", "yes"};

    const std::string path =
        (std::filesystem::temp_directory_path() / "cofrnet_model_rt.json").string();
    save_model(path, mf);
    const ModelFile back = load_model(path);
    std::remove(path.c_str());

    CHECK(back.model.variant == Variant::DL);
    CHECK(back.class_labels == mf.class_labels);
    for (int i = 0; i < 1000; ++i) {
        const std::vector<double> x = testutil::random_point(rng, 3, 3.0);
        const std::vector<double> a = model_eval(mf.model, x);
        const std::vector<double> b = model_eval(back.model, x);
        for (int j = 0; j < 2; ++j) CHECK(a[j] == b[j]);  // bit-identical
    }
}

TEST_CASE("predict_raw applies stored preprocessing") {
    ModelFile mf;
    // identity-ish model: one depth-0 ladder copying feature 0
    Ladder l;
    l.depth = 0;
    l.weights = Matrix(1, 2);
    l.weights(0, 0) = 1.0;
    l.feature_mask = {0};
    mf.model = CoFrNetModel{};
    mf.model.input_dim = 1;
    mf.model.output_dim = 1;
    mf.model.ladders = {l};
    mf.model.mixing = Matrix(1, 1);
    mf.model.mixing(0, 0) = 1.0;
    mf.model.output_bias = {0.0};
    mf.stand.active = true;
    mf.stand.feature_mean = {10.0};
    mf.stand.feature_std = {2.0};
    mf.stand.target_mean = 5.0;
    mf.stand.target_std = 3.0;

    // model computes x_std; prediction = x_std * 3 + 5
    const std::vector<double> x = {14.0};  // x_std = 2
    CHECK(predict_raw(mf, x)[0] == doctest::Approx(11.0));
}

TEST_CASE("series export schema") {
    MultiSeries s(2, 3);
    s.set_coefficient({2, 0}, 0.56);
    s.set_coefficient({1, 1}, -1.0);
    const nlohmann::json j = series_to_json(s);
    CHECK(j["num_vars"] == 2);
    CHECK(j["max_degree"] == 3);
    CHECK(j["center"].size() == 2);
    REQUIRE(j["terms"].size() == 2);
    CHECK(j["terms"][0]["exponents"].size() == 2);
}

TEST_CASE("history csv layout") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "cofrnet_hist.csv").string();
    std::vector<EpochStats> h = {{1, 0.5, 0.6, 0.6}, {2, 0.25, 0.3, 0.3}};
    write_history_csv(path, h);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "epoch,train_loss,val_loss,val_metric");
    std::getline(f, line);
    CHECK(line.substr(0, 2) == "1,");
    std::remove(path.c_str());
}

TEST_SUITE_END();
