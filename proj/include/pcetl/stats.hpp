#pragma once

#include <span>

namespace pcetl {

struct Summary {
    double mean;
    double sd;  // sample standard deviation, 0 for fewer than two values
};

/// NaN mean for an empty range.
Summary summarize(std::span<const double> values);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant or the lengths differ.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace pcetl
