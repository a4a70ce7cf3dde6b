#pragma once

#include <span>

namespace promptcast {

double mae(std::span<const double> truth, std::span<const double> predicted);
double rmse(std::span<const double> truth, std::span<const double> predicted);

/// 1 - SS_res / SS_tot. May be arbitrarily negative. Constant truth makes the
/// denominator vanish and raises ZeroVariance instead of returning a sentinel.
double r2_score(std::span<const double> truth, std::span<const double> predicted);

}  // namespace promptcast
