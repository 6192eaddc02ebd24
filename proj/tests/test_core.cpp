#include <doctest.h>

#include <random>

#include "cofrnet/continuants.hpp"
#include "cofrnet/core.hpp"
#include "oracles.hpp"

using namespace cofrnet;

namespace {

Ladder forced_ladder(std::vector<double> a_values) {
    // p = 1, x = (1), no bias: row k weight = a_k
    Ladder l;
    l.depth = static_cast<int>(a_values.size()) - 1;
    l.weights = Matrix(l.depth + 1, 2);
    for (int k = 0; k <= l.depth; ++k) l.weights(k, 0) = a_values[k];
    l.feature_mask = {0};
    return l;
}

CoFrNetModel tiny_model(std::vector<Ladder> ladders, Matrix mixing,
                        std::vector<double> bias, int p, int q) {
    CoFrNetModel m;
    m.variant = Variant::F;
    m.input_dim = p;
    m.output_dim = q;
    m.ladders = std::move(ladders);
    m.mixing = std::move(mixing);
    m.output_bias = std::move(bias);
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("safe_recip branches") {
    CHECK(safe_recip(2.0, 0.1) == doctest::Approx(0.5));
    CHECK(safe_recip(0.05, 0.1) == doctest::Approx(10.0));
    CHECK(safe_recip(-0.05, 0.1) == doctest::Approx(-10.0));
    CHECK(safe_recip(0.0, 0.1) == doctest::Approx(10.0));  // sgn(0) = +1
    CHECK(safe_recip(-0.0, 0.1) == doctest::Approx(-10.0));
}

TEST_CASE("safe_recip is exact outside the clamp and bounded inside") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const double z = unif(rng);
        const double eps = 0.05 + 0.2 * std::fabs(unif(rng)) / 3.0;
        const double r = safe_recip(z, eps);
        if (std::fabs(z) >= eps) CHECK(r == 1.0 / z);
        CHECK(std::fabs(r) <= 1.0 / eps + 1e-15);
    }
}

TEST_CASE("safe_recip_grad uses the unclamped branch at the boundary") {
    CHECK(safe_recip_grad(2.0, 0.1) == doctest::Approx(-0.25));
    CHECK(safe_recip_grad(0.05, 0.1) == 0.0);
    CHECK(safe_recip_grad(0.1, 0.1) == doctest::Approx(-100.0));
    CHECK(safe_recip_grad(-0.1, 0.1) == doctest::Approx(-100.0));
}

TEST_CASE("ladder_eval on forced a-values (1,2,3)") {
    const Ladder l = forced_ladder({1.0, 2.0, 3.0});
    const std::vector<double> x = {1.0};
    LayerTrace trace;
    const double v = ladder_eval(l, x, 1e-6, &trace);
    CHECK(v == doctest::Approx(10.0 / 7.0).epsilon(1e-12));
    // matches the continuant ratio
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(v == doctest::Approx(cf_via_continuants(a)).epsilon(1e-12));

    REQUIRE(trace.z.size() == 2);
    CHECK(trace.z[1] == doctest::Approx(3.0));
    CHECK(trace.z[0] == doctest::Approx(2.0 + 1.0 / 3.0));
    for (size_t k = 0; k < trace.z.size(); ++k)
        CHECK(trace.s[k] == safe_recip(trace.z[k], 1e-6));
}

TEST_CASE("depth-0 ladder is the affine rung") {
    Ladder l;
    l.depth = 0;
    l.weights = Matrix(1, 2);
    l.weights(0, 0) = 3.0;
    l.weights(0, 1) = -1.0;
    l.feature_mask = {0};
    const std::vector<double> x = {2.0};
    LayerTrace trace;
    CHECK(ladder_eval(l, x, 0.1, &trace) == doctest::Approx(5.0));
    CHECK(trace.z.empty());
}

TEST_CASE("depth-1 ladder with zero top rung") {
    Ladder l;
    l.depth = 1;
    l.weights = Matrix(2, 2);
    l.weights(1, 0) = 1.0;
    l.weights(1, 1) = 1.0;
    l.feature_mask = {0};
    const std::vector<double> x = {0.0};
    CHECK(ladder_eval(l, x, 0.1, nullptr) == doctest::Approx(1.0));
}

TEST_CASE("ladder_eval rejects dimension mismatch") {
    const Ladder l = forced_ladder({1.0, 2.0});
    const std::vector<double> x = {1.0, 2.0};
    CHECK_THROWS_AS(ladder_eval(l, x, 0.1, nullptr), DimensionError);
}

TEST_CASE("ladder_eval with shrinking eps approaches the exact fraction") {
    std::mt19937_64 rng(11);
    int done = 0;
    while (done < 500) {
        const int d = 1 + static_cast<int>(rng() % 5);
        const Ladder l = testutil::random_full_ladder(rng, 3, d);
        const std::vector<double> x = testutil::random_point(rng, 3);
        if (!testutil::well_conditioned(l, x)) continue;
        const double clamped = ladder_eval(l, x, 1e-12, nullptr);
        const double exact = testutil::exact_ladder_value(l, x);
        CHECK(testutil::rel_err(clamped, exact) < 1e-10);
        ++done;
    }
}

TEST_CASE("ladder evaluation is pure") {
    std::mt19937_64 rng(13);
    const Ladder l = testutil::random_full_ladder(rng, 4, 5);
    const std::vector<double> x = testutil::random_point(rng, 4);
    const double a = ladder_eval(l, x, 0.1, nullptr);
    for (int i = 0; i < 10; ++i) CHECK(ladder_eval(l, x, 0.1, nullptr) == a);
}

TEST_CASE("model_eval combines ladders linearly") {
    SUBCASE("single ladder scaled to 10") {
        Matrix mix(1, 1);
        mix(0, 0) = 7.0;
        CoFrNetModel m = tiny_model({forced_ladder({1.0, 2.0, 3.0})}, mix, {0.0}, 1, 1);
        m.epsilon = 1e-9;
        const std::vector<double> x = {1.0};
        CHECK(model_eval(m, x)[0] == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("two ladders with signs and bias") {
        // depth-0 ladders valued 2 and 3 at x = 1
        Matrix mix(2, 1);
        mix(0, 0) = 1.0;
        mix(1, 0) = -1.0;
        CoFrNetModel m = tiny_model({forced_ladder({2.0}), forced_ladder({3.0})},
                                    mix, {0.5}, 1, 1);
        const std::vector<double> x = {1.0};
        CHECK(model_eval(m, x)[0] == doctest::Approx(-0.5));
    }
}

TEST_CASE("zero-ladder models are rejected") {
    CoFrNetModel m;
    m.input_dim = 1;
    m.output_dim = 1;
    m.output_bias = {0.0};
    CHECK_THROWS_AS(m.validate(), DimensionError);
    const std::vector<double> x = {1.0};
    CHECK_THROWS_AS(model_eval(m, x), DimensionError);
}

TEST_CASE("masked weights must be zero") {
    Ladder l;
    l.depth = 0;
    l.weights = Matrix(1, 3);
    l.weights(0, 0) = 1.0;
    l.weights(0, 1) = 0.5;  // outside the mask
    l.feature_mask = {0};
    CHECK_THROWS_AS(l.validate(), ConfigError);
}

TEST_CASE("param_count on a uniform full model") {
    std::mt19937_64 rng(3);
    std::vector<Ladder> ladders = {testutil::random_full_ladder(rng, 2, 6)};
    Matrix mix(1, 1);
    mix(0, 0) = 1.0;
    CoFrNetModel m = tiny_model(std::move(ladders), mix, {0.0}, 2, 1);

    const ParamCount pc = param_count(m);
    CHECK(pc.actual == 22);  // 7 rows x 3 columns + 1 mixing weight
    REQUIRE(pc.closed_form.has_value());
    CHECK(*pc.closed_form == 11);  // 2*1*5 + 1
}

TEST_CASE("param_count closed form for the smallest shape") {
    std::mt19937_64 rng(4);
    std::vector<Ladder> ladders = {testutil::random_full_ladder(rng, 1, 1)};
    Matrix mix(1, 1);
    CoFrNetModel m = tiny_model(std::move(ladders), mix, {0.0}, 1, 1);
    REQUIRE(param_count(m).closed_form.has_value());
    CHECK(*param_count(m).closed_form == 1);
}

TEST_CASE("param_count closed form unavailable off the uniform-F case") {
    std::mt19937_64 rng(5);
    SUBCASE("non-uniform depths") {
        std::vector<Ladder> ladders = {testutil::random_full_ladder(rng, 2, 3),
                                       testutil::random_full_ladder(rng, 2, 4)};
        Matrix mix(2, 1);
        CoFrNetModel m = tiny_model(std::move(ladders), mix, {0.0}, 2, 1);
        CHECK_FALSE(param_count(m).closed_form.has_value());
        CHECK(param_count(m).actual > 0);
    }
    SUBCASE("variant d") {
        Ladder l = forced_ladder({1.0, 2.0});
        Matrix mix(1, 1);
        CoFrNetModel m = tiny_model({l}, mix, {0.0}, 1, 1);
        m.variant = Variant::D;
        CHECK_FALSE(param_count(m).closed_form.has_value());
    }
}

TEST_CASE("variant-d models are additive in unmasked features") {
    // two singleton ladders over features 0 and 1 of a 3-feature input;
    // feature 2 appears in no mask, so it cannot move the output
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    auto singleton = [&](int feature, int depth) {
        Ladder l;
        l.depth = depth;
        l.weights = Matrix(depth + 1, 4);
        for (int k = 0; k <= depth; ++k) {
            l.weights(k, feature) = unif(rng);
            l.weights(k, 3) = unif(rng) + (k >= 1 ? 1.0 : 0.0);
        }
        l.feature_mask = {feature};
        return l;
    };

    Matrix mix(2, 1);
    mix(0, 0) = 1.3;
    mix(1, 0) = -0.7;
    CoFrNetModel m = tiny_model({singleton(0, 2), singleton(1, 3)}, mix, {0.2}, 3, 1);
    m.variant = Variant::D;
    m.validate();

    for (int i = 0; i < 100; ++i) {
        std::vector<double> x = testutil::random_point(rng, 3);
        std::vector<double> x2 = x;
        x2[2] = unif(rng) * 10.0;
        CHECK(model_eval(m, x)[0] == model_eval(m, x2)[0]);
    }
}

TEST_SUITE_END();
