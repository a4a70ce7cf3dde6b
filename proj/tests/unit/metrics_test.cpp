#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "promptcast/errors.hpp"
#include "promptcast/metrics.hpp"
#include "../support/oracles.hpp"

using namespace promptcast;

TEST_CASE("mae examples") {
    CHECK(mae(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(mae(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(mae(std::vector<double>{10}, std::vector<double>{7}) == 3.0);
}

TEST_CASE("rmse examples") {
    CHECK(rmse(std::vector<double>{4, 5}, std::vector<double>{4, 5}) == 0.0);
    CHECK(rmse(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) ==
          doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("r2 examples") {
    CHECK(r2_score(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 1.0);
    CHECK(r2_score(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) == 0.0);
    // predicting the mean gives exactly zero
    CHECK(r2_score(std::vector<double>{2, 4, 6}, std::vector<double>{4, 4, 4}) == 0.0);
}

TEST_CASE("metric error paths") {
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), EmptyInput);
    CHECK_THROWS_AS(mae(std::vector<double>{1}, std::vector<double>{1, 2}), LengthMismatch);
    CHECK_THROWS_AS(r2_score(std::vector<double>{5, 5, 5}, std::vector<double>{1, 2, 3}),
                    ZeroVariance);
}

TEST_CASE("metrics agree with straight-loop oracles and rmse dominates mae") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> value(-1e4, 1e4);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 50);
        std::vector<double> truth;
        std::vector<double> pred;
        for (int i = 0; i < n; ++i) {
            truth.push_back(value(rng));
            pred.push_back(value(rng));
        }
        CHECK(mae(truth, pred) ==
              doctest::Approx(oracle::loop_mae(truth, pred)).epsilon(1e-9));
        CHECK(rmse(truth, pred) ==
              doctest::Approx(oracle::loop_rmse(truth, pred)).epsilon(1e-9));
        CHECK(r2_score(truth, pred) ==
              doctest::Approx(oracle::loop_r2(truth, pred)).epsilon(1e-9));
        CHECK(rmse(truth, pred) >= mae(truth, pred));
    }
}

TEST_CASE("r2 is invariant under a common translation") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> value(0.0, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> truth;
        std::vector<double> pred;
        for (int i = 0; i < 10; ++i) {
            truth.push_back(value(rng));
            pred.push_back(value(rng));
        }
        const double base = r2_score(truth, pred);
        const double shift = value(rng);
        std::vector<double> truth2 = truth;
        std::vector<double> pred2 = pred;
        for (auto& v : truth2) v += shift;
        for (auto& v : pred2) v += shift;
        CHECK(r2_score(truth2, pred2) == doctest::Approx(base).epsilon(1e-9));
    }
}
