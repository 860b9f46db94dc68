#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ranklens/embedding.hpp"
#include "ranklens/errors.hpp"
#include "ranklens/rng.hpp"

using namespace ranklens;

TEST_CASE("load_embeddings parses and validates dimensions") {
    std::istringstream in("alpha 1.0 0.0\nbeta 0.0 1.0\ngamma 0.5 0.5\n");
    auto table = load_embeddings(in, 2);
    CHECK(table.size() == 3);
    CHECK(table.dim() == 2);
    CHECK((*table.lookup("alpha", OovPolicy::ZeroVector))[0] == 1.0);

    std::istringstream bad("alpha 1.0 0.0\nbeta 0.0\n");
    CHECK_THROWS_WITH_AS(load_embeddings(bad, 2), doctest::Contains("line 2"), config_error);
}

TEST_CASE("vocab mean equals the componentwise mean") {
    std::istringstream in("a 1.0 0.0\nb 0.0 1.0\nc 2.0 3.0\n");
    auto table = load_embeddings(in, 2);
    CHECK(table.mean_vector()[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(table.mean_vector()[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("OOV policies") {
    std::istringstream in("a 1.0 0.0\nb 0.0 1.0\n");
    auto table = load_embeddings(in, 2);

    auto zero = table.lookup("missing", OovPolicy::ZeroVector);
    REQUIRE(zero.has_value());
    CHECK((*zero)[0] == 0.0);
    CHECK((*zero)[1] == 0.0);

    auto mean = table.lookup("missing", OovPolicy::VocabMean);
    REQUIRE(mean.has_value());
    CHECK((*mean)[0] == doctest::Approx(0.5));
    CHECK((*mean)[1] == doctest::Approx(0.5));

    CHECK_FALSE(table.lookup("missing", OovPolicy::Filter).has_value());
    CHECK(table.lookup("a", OovPolicy::Filter).has_value());
}

TEST_CASE("cosine similarity conventions") {
    CHECK(cosine_sim({1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(cosine_sim({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_sim({0, 0}, {3, 4}) == 0.0);
    CHECK(cosine_sim({0, 0}, {0, 0}) == 0.0);
    CHECK_THROWS_AS(cosine_sim({1, 0}, {1, 0, 0}), config_error);
}

TEST_CASE("cosine symmetry and scale invariance") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(8), b(8), a2(8);
        for (std::size_t i = 0; i < 8; ++i) {
            a[i] = rng.next_gaussian();
            b[i] = rng.next_gaussian();
            a2[i] = 2.0 * a[i];
        }
        double ab = cosine_sim(a, b);
        CHECK(ab == doctest::Approx(cosine_sim(b, a)).epsilon(1e-12));
        CHECK(ab == doctest::Approx(cosine_sim(a2, b)).epsilon(1e-9));
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("generated embeddings are seeded, unit-norm, and order-independent") {
    auto t1 = generate_embeddings({"alpha", "beta", "gamma"}, 16, 99);
    auto t2 = generate_embeddings({"gamma", "alpha", "beta"}, 16, 99);
    auto t3 = generate_embeddings({"alpha", "beta", "gamma"}, 16, 100);

    for (const auto& term : {"alpha", "beta", "gamma"}) {
        auto v1 = *t1.lookup(term, OovPolicy::Filter);
        auto v2 = *t2.lookup(term, OovPolicy::Filter);
        CHECK(v1 == v2);
        double norm = 0.0;
        for (double x : v1) norm += x * x;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(*t1.lookup("alpha", OovPolicy::Filter) != *t3.lookup("alpha", OovPolicy::Filter));
}
