#include <doctest.h>

#include <cmath>
#include <random>

#include "cofrnet/json_io.hpp"
#include "cofrnet/poly_encoder.hpp"
#include "oracles.hpp"

using namespace cofrnet;

namespace {

SparsePoly random_sparse_poly(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    SparsePoly poly;
    poly.num_vars = 1 + static_cast<int>(rng() % 4);
    poly.constant = (rng() % 2 == 0) ? coef(rng) : 0.0;
    const int n_mono = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n_mono; ++i) {
        Monomial m;
        m.coeff = coef(rng);
        const int degree = 1 + static_cast<int>(rng() % 5);
        for (int k = 0; k < degree; ++k) {
            std::vector<double> u(poly.num_vars);
            for (double& v : u) v = dir(rng);
            m.dirs.push_back(std::move(u));
        }
        poly.monomials.push_back(std::move(m));
    }
    return poly;
}

}  // namespace

TEST_SUITE_BEGIN("poly_encoder");

TEST_CASE("gcf_eval worked examples") {
    SUBCASE("depth 1, numerators (2, -3), denominator 1 + 3") {
        GeneralizedCF g;
        g.depth = 1;
        g.numerators = {{{0.0}, 2.0}, {{-1.0}, 0.0}};
        g.denominators = {{{1.0}, 0.0}};
        const std::vector<double> x = {3.0};
        CHECK(gcf_eval(g, x) == doctest::Approx(8.0));
    }
    SUBCASE("depth 0 is the bare numerator") {
        GeneralizedCF g;
        g.depth = 0;
        g.numerators = {{{2.0, -1.0}, 0.5}};
        const std::vector<double> x = {1.0, 3.0};
        CHECK(gcf_eval(g, x) == doctest::Approx(-0.5));
    }
    SUBCASE("zero denominator raises with the stage index") {
        GeneralizedCF g;
        g.depth = 1;
        g.numerators = {{{0.0}, 1.0}, {{0.0}, 1.0}};
        g.denominators = {{{1.0}, -1.0}};  // 1 + x - 1 = 0 at x = 0
        const std::vector<double> x = {0.0};
        try {
            gcf_eval(g, x);
            FAIL("expected PoleError");
        } catch (const PoleError& e) {
            CHECK(e.stage() == 1);
        }
    }
}

TEST_CASE("product-sum ladders hit every partial sum") {
    std::mt19937_64 rng(89);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    int done = 0;
    while (done < 300) {
        const int p = 1 + static_cast<int>(rng() % 3);
        const int d = 1 + static_cast<int>(rng() % 5);
        std::vector<std::vector<double>> dirs(d, std::vector<double>(p));
        for (auto& u : dirs)
            for (double& v : u) v = unif(rng);
        const double c = unif(rng) * 3.0;
        const std::vector<double> x = testutil::random_point(rng, p);

        bool skipped = false;
        for (int k = 1; k <= d; ++k) {
            const GeneralizedCF g = euler_ladder(c, std::span(dirs).subspan(0, k), p);
            double min_den = 0.0;
            double got = 0.0;
            try {
                got = gcf_eval(g, x, &min_den);
            } catch (const PoleError&) {
                skipped = true;
                break;
            }
            if (min_den < 1e-3) {
                skipped = true;
                break;
            }
            // expected partial sum c + c a_1 + ... + c a_1...a_k
            double sum = c, prod = c;
            for (int i = 0; i < k; ++i) {
                double dot = 0.0;
                for (int j = 0; j < p; ++j) dot += dirs[i][j] * x[j];
                prod *= dot;
                sum += prod;
            }
            CHECK(testutil::rel_err(got, sum) < 1e-10);
        }
        if (!skipped) ++done;
    }
}

TEST_CASE("encode_monomial recovers the monomial as a difference") {
    SUBCASE("2 * x at x = 3") {
        const std::vector<std::vector<double>> dirs = {{1.0}};
        auto [full, partial] = encode_monomial(2.0, dirs);
        const std::vector<double> x = {3.0};
        CHECK(gcf_eval(full, x) == doctest::Approx(8.0));
        CHECK(gcf_eval(partial, x) == doctest::Approx(2.0));
        CHECK(gcf_eval(full, x) - gcf_eval(partial, x) == doctest::Approx(6.0));
    }
    SUBCASE("x^2 at x = 2") {
        const std::vector<std::vector<double>> dirs = {{1.0}, {1.0}};
        auto [full, partial] = encode_monomial(1.0, dirs);
        const std::vector<double> x = {2.0};
        CHECK(gcf_eval(full, x) == doctest::Approx(7.0));     // 1 + 2 + 4
        CHECK(gcf_eval(partial, x) == doctest::Approx(3.0));  // 1 + 2
        CHECK(gcf_eval(full, x) - gcf_eval(partial, x) == doctest::Approx(4.0));
    }
    SUBCASE("a vanishing direction kills the monomial but not the fraction") {
        const std::vector<std::vector<double>> dirs = {{1.0, 0.0}, {0.0, 1.0}};
        auto [full, partial] = encode_monomial(5.0, dirs);
        const std::vector<double> x = {0.0, 0.7};  // u_1 . x = 0
        CHECK(gcf_eval(full, x) - gcf_eval(partial, x) == doctest::Approx(0.0));
    }
    SUBCASE("empty direction list rejected") {
        CHECK_THROWS_AS(encode_monomial(1.0, {}), ConfigError);
    }
}

TEST_CASE("encode_poly structure and ladder count") {
    SUBCASE("pure constant") {
        SparsePoly poly;
        poly.num_vars = 2;
        poly.constant = 5.0;
        const std::vector<SignedGcf> enc = encode_poly(poly);
        REQUIRE(enc.size() == 1);
        CHECK(enc[0].gcf.depth == 0);
        const std::vector<double> x = {0.3, -0.9};
        CHECK(eval_encoding(enc, x) == doctest::Approx(5.0));
    }
    SUBCASE("product x1 x2") {
        SparsePoly poly;
        poly.num_vars = 2;
        Monomial m;
        m.coeff = 1.0;
        m.dirs = {{1.0, 0.0}, {0.0, 1.0}};
        poly.monomials.push_back(m);
        const std::vector<SignedGcf> enc = encode_poly(poly);
        REQUIRE(enc.size() == 2);
        const std::vector<double> x = {2.0, 3.0};
        CHECK(eval_encoding(enc, x) == doctest::Approx(6.0));
    }
    SUBCASE("zero constant elides its ladder, count stays within bound") {
        std::mt19937_64 rng(97);
        for (int i = 0; i < 100; ++i) {
            const SparsePoly poly = random_sparse_poly(rng);
            const std::vector<SignedGcf> enc = encode_poly(poly);
            const size_t bound = 2 * poly.monomials.size() + 1;
            CHECK(enc.size() <= bound);
            if (poly.constant == 0.0) CHECK(enc.size() == 2 * poly.monomials.size());
        }
    }
}

TEST_CASE("verify_encoding on exact constructions") {
    SUBCASE("x1 x2 in the unit box") {
        SparsePoly poly;
        poly.num_vars = 2;
        Monomial m;
        m.coeff = 1.0;
        m.dirs = {{1.0, 0.0}, {0.0, 1.0}};
        poly.monomials.push_back(m);
        const std::vector<SignedGcf> enc = encode_poly(poly);
        const VerifyResult r = verify_encoding(poly, enc, 1000, 1.0, 123);
        CHECK(r.accepted > 900);
        CHECK(r.max_rel_error <= 1e-9);
    }
    SUBCASE("constant has zero error") {
        SparsePoly poly;
        poly.num_vars = 1;
        poly.constant = -2.5;
        const std::vector<SignedGcf> enc = encode_poly(poly);
        const VerifyResult r = verify_encoding(poly, enc, 200, 2.0, 5);
        CHECK(r.max_rel_error == 0.0);
    }
    SUBCASE("x^4 over [-2, 2]") {
        SparsePoly poly;
        poly.num_vars = 1;
        Monomial m;
        m.coeff = 1.0;
        m.dirs = {{1.0}, {1.0}, {1.0}, {1.0}};
        poly.monomials.push_back(m);
        const std::vector<SignedGcf> enc = encode_poly(poly);
        const VerifyResult r = verify_encoding(poly, enc, 1000, 2.0, 7);
        CHECK(r.accepted > 0);
        CHECK(r.max_rel_error <= 1e-8);
    }
}

TEST_CASE("random sparse polynomials verify below 1e-8") {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 40; ++i) {
        const SparsePoly poly = random_sparse_poly(rng);
        const std::vector<SignedGcf> enc = encode_poly(poly);
        const VerifyResult r = verify_encoding(poly, enc, 300, 1.0, rng());
        CHECK(r.max_rel_error <= 1e-8);
    }
}

TEST_CASE("polynomial text parsing") {
    SUBCASE("the documented example") {
        const SparsePoly poly = poly_from_text("2*x1^2*x2 - 0.5*x2");
        CHECK(poly.num_vars == 2);
        CHECK(poly.constant == 0.0);
        REQUIRE(poly.monomials.size() == 2);
        CHECK(poly.monomials[0].coeff == doctest::Approx(2.0));
        REQUIRE(poly.monomials[0].dirs.size() == 3);  // x1, x1, x2
        CHECK(poly.monomials[0].dirs[0] == std::vector<double>{1.0, 0.0});
        CHECK(poly.monomials[0].dirs[2] == std::vector<double>{0.0, 1.0});
        CHECK(poly.monomials[1].coeff == doctest::Approx(-0.5));

        const std::vector<double> x = {1.5, -2.0};
        CHECK(poly_eval(poly, x) ==
              doctest::Approx(2.0 * 1.5 * 1.5 * -2.0 - 0.5 * -2.0));
    }
    SUBCASE("constants fold together") {
        const SparsePoly poly = poly_from_text("3 + 2*x1 - 1", 1);
        CHECK(poly.constant == doctest::Approx(2.0));
        CHECK(poly.monomials.size() == 1);
    }
    SUBCASE("parse errors carry an offset") {
        CHECK_THROWS_AS(poly_from_text("2*"), Error);
        CHECK_THROWS_AS(poly_from_text("x0"), Error);
        CHECK_THROWS_AS(poly_from_text(""), Error);
    }
    SUBCASE("parsed text matches the JSON form") {
        const SparsePoly a = poly_from_text("0.26*x1^2 + 0.26*x2^2 - 0.48*x1*x2");
        const nlohmann::json j = {
            {"constant", 0.0},
            {"monomials",
             {{{"coeff", 0.26}, {"dirs", {{1.0, 0.0}, {1.0, 0.0}}}},
              {{"coeff", 0.26}, {"dirs", {{0.0, 1.0}, {0.0, 1.0}}}},
              {{"coeff", -0.48}, {"dirs", {{1.0, 0.0}, {0.0, 1.0}}}}}}};
        const SparsePoly b = poly_from_json(j);
        std::mt19937_64 rng(7);
        for (int i = 0; i < 50; ++i) {
            const std::vector<double> x = testutil::random_point(rng, 2, 3.0);
            CHECK(poly_eval(a, x) == doctest::Approx(poly_eval(b, x)));
        }
    }
}

TEST_CASE("matyas-style polynomial encodes into 6 ladders") {
    const SparsePoly poly = poly_from_text("0.26*x1^2 + 0.26*x2^2 - 0.48*x1*x2");
    const std::vector<SignedGcf> enc = encode_poly(poly);
    CHECK(enc.size() == 6);  // zero constant elided from the 2*3+1 bound
    const VerifyResult r = verify_encoding(poly, enc, 1000, 1.0, 11);
    CHECK(r.max_rel_error <= 1e-9);
}

TEST_SUITE_END();
