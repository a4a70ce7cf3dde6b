#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "promptcast/errors.hpp"
#include "promptcast/series.hpp"

using namespace promptcast;

TEST_CASE("incremental series is the consecutive differences") {
    CHECK(incremental_series(ThroughputSeries({1, 2, 3, 4, 5})).deltas ==
          std::vector<double>{1, 1, 1, 1});
    CHECK(incremental_series(ThroughputSeries({5, 5, 5, 5, 5})).deltas ==
          std::vector<double>{0, 0, 0, 0});
    CHECK(incremental_series(ThroughputSeries({0, 3, 1, 1, 6})).deltas ==
          std::vector<double>{3, -2, 0, 5});
}

TEST_CASE("incremental series telescopes back to the last value") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> value(0.0, 2e5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> values;
        const int h = 2 + static_cast<int>(rng() % 14);
        for (int i = 0; i < h; ++i) values.push_back(value(rng));
        const ThroughputSeries series(values);
        const auto inc = incremental_series(series);
        REQUIRE(inc.deltas.size() == values.size() - 1);
        double reconstructed = series.front();
        for (double d : inc.deltas) reconstructed += d;
        CHECK(std::abs(reconstructed - series.back()) <= 1e-9);
    }
}

TEST_CASE("series invariants are enforced") {
    CHECK_THROWS_AS(ThroughputSeries({1.0}), InvalidSeries);
    CHECK_THROWS_AS(ThroughputSeries({1.0, -2.0}), InvalidSeries);
    CHECK_THROWS_AS(ThroughputSeries({1.0, std::nan("")}), InvalidSeries);
}

TEST_CASE("unit scale triggers strictly above 1e5 kbps") {
    CHECK(determine_unit_scale(std::vector<ThroughputSeries>{
              ThroughputSeries({250000, 100, 100, 100, 100})}) == mbps_scale());
    CHECK(determine_unit_scale(std::vector<ThroughputSeries>{
              ThroughputSeries({99999, 1, 1, 1, 1})}) == kbps_scale());
    CHECK(determine_unit_scale(std::vector<ThroughputSeries>{
              ThroughputSeries({100000, 1, 1, 1, 1})}) == kbps_scale());

    // the gate looks at every provided series
    const std::vector<ThroughputSeries> pair = {ThroughputSeries({80000, 80000}),
                                                ThroughputSeries({120000, 1})};
    CHECK(determine_unit_scale(pair) == mbps_scale());
}

TEST_CASE("unit scale decision is monotone under added series") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> value(0.0, 3e5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ThroughputSeries> set;
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i) {
            set.push_back(ThroughputSeries({value(rng), value(rng), value(rng)}));
        }
        const auto before = determine_unit_scale(set);
        set.push_back(ThroughputSeries({value(rng), value(rng)}));
        const auto after = determine_unit_scale(set);
        if (before == mbps_scale()) CHECK(after == mbps_scale());
    }
}

TEST_CASE("apply and invert scale") {
    CHECK(apply_scale(250000, mbps_scale()) == 250.0);
    CHECK(invert_scale(250.0, mbps_scale()) == 250000);
    CHECK(apply_scale(0, mbps_scale()) == 0);
    CHECK(apply_scale(0, kbps_scale()) == 0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> value(0.0, 1e7);
    for (int trial = 0; trial < 500; ++trial) {
        const double v = value(rng);
        for (const auto& scale : {kbps_scale(), mbps_scale()}) {
            CHECK(invert_scale(apply_scale(v, scale), scale) ==
                  doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("throughput formatting follows the unit") {
    CHECK(format_throughput(12345, kbps_scale()) == "12345");
    CHECK(format_throughput(250000, mbps_scale()) == "250.0");
    CHECK(format_throughput(120000, mbps_scale()) == "120.0");
    CHECK(format_throughput(0, kbps_scale()) == "0");
}
