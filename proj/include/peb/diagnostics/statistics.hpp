#pragma once

#include <span>
#include <vector>

namespace peb::diagnostics {

double mean(std::span<const double> x);
double median(std::span<const double> x);
double stddev(std::span<const double> x);  // population
// Pearson correlation; throws DomainError for fewer than 2 samples or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> x);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace peb::diagnostics
