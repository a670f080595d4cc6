#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bfl {

// 1 - sum|pi_hat - pi_true| / (2 (1 - min pi_true)). Its complement is the
// normalized absolute error.
double csmf_accuracy(std::span<const double> pi_hat, std::span<const double> pi_true);

double top_cause_accuracy(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> truth);

// Mean per-cause recall over causes that occur in `truth`.
double balanced_accuracy(std::span<const std::size_t> predicted,
                         std::span<const std::size_t> truth, std::size_t C);

std::vector<double> empirical_csmf(std::span<const std::size_t> labels, std::size_t C);

}  // namespace bfl
