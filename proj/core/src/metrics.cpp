#include "promptcast/metrics.hpp"

#include <cmath>
#include <string>

#include "promptcast/errors.hpp"

namespace promptcast {
namespace {

void check_lengths(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.empty()) {
        throw EmptyInput("metric over empty input");
    }
    if (truth.size() != predicted.size()) {
        throw LengthMismatch("metric inputs differ in length: " + std::to_string(truth.size()) +
                             " vs " + std::to_string(predicted.size()));
    }
}

}  // namespace

double mae(std::span<const double> truth, std::span<const double> predicted) {
    check_lengths(truth, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sum += std::abs(truth[i] - predicted[i]);
    }
    return sum / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
    check_lengths(truth, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - predicted[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(truth.size()));
}

double r2_score(std::span<const double> truth, std::span<const double> predicted) {
    check_lengths(truth, predicted);
    double mean = 0.0;
    for (double y : truth) mean += y;
    mean /= static_cast<double>(truth.size());

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = truth[i] - predicted[i];
        const double t = truth[i] - mean;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot == 0.0) {
        throw ZeroVariance("truth values are constant, r2 undefined");
    }
    return 1.0 - ss_res / ss_tot;
}

}  // namespace promptcast
