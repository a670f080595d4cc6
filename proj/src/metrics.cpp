#include "bfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "bfl/error.hpp"
#include "bfl/numeric.hpp"

namespace bfl {

double csmf_accuracy(std::span<const double> pi_hat, std::span<const double> pi_true) {
  if (pi_hat.size() != pi_true.size()) fail(ErrorCode::LengthMismatch, "CSMF lengths differ");
  if (!is_simplex(pi_hat, 1e-6)) fail(ErrorCode::NotASimplex, "estimated CSMF");
  if (!is_simplex(pi_true, 1e-6)) fail(ErrorCode::NotASimplex, "true CSMF");
  const double floor = *std::min_element(pi_true.begin(), pi_true.end());
  const double denom = 2.0 * (1.0 - floor);
  if (!(denom > 0.0)) fail(ErrorCode::NotASimplex, "true CSMF is a single-cause point mass");
  double err = 0.0;
  for (std::size_t c = 0; c < pi_hat.size(); ++c) err += std::abs(pi_hat[c] - pi_true[c]);
  return std::clamp(1.0 - err / denom, 0.0, 1.0);
}

double top_cause_accuracy(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) fail(ErrorCode::LengthMismatch, "prediction/truth");
  if (truth.empty()) fail(ErrorCode::EmptyInput, "no deaths to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double balanced_accuracy(std::span<const std::size_t> predicted,
                         std::span<const std::size_t> truth, std::size_t C) {
  if (predicted.size() != truth.size()) fail(ErrorCode::LengthMismatch, "prediction/truth");
  if (truth.empty()) fail(ErrorCode::EmptyInput, "no deaths to score");
  std::vector<std::size_t> n(C, 0), hit(C, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= C || predicted[i] >= C) {
      fail(ErrorCode::LengthMismatch, "cause index outside the cause list");
    }
    ++n[truth[i]];
    hit[truth[i]] += predicted[i] == truth[i] ? 1 : 0;
  }
  // Evaluated as one rational over the lcm of the class sizes when it fits,
  // so equal class sizes give exactly hits / n.
  std::uint64_t L = 1, occurring = 0;
  bool exact = true;
  for (std::size_t c = 0; c < C; ++c) {
    if (n[c] == 0) continue;
    ++occurring;
    const std::uint64_t g = std::gcd(L, static_cast<std::uint64_t>(n[c]));
    if (exact && __builtin_mul_overflow(L / g, static_cast<std::uint64_t>(n[c]), &L)) exact = false;
  }
  std::uint64_t num = 0, den = 0;
  exact = exact && !__builtin_mul_overflow(L, occurring, &den) && den < (1ULL << 53);
  for (std::size_t c = 0; exact && c < C; ++c) {
    if (n[c] == 0) continue;
    std::uint64_t term = 0;
    exact = !__builtin_mul_overflow(static_cast<std::uint64_t>(hit[c]), L / n[c], &term) &&
            !__builtin_add_overflow(num, term, &num);
  }
  if (exact) return static_cast<double>(num) / static_cast<double>(den);
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (n[c] > 0) total += static_cast<double>(hit[c]) / static_cast<double>(n[c]);
  }
  return total / static_cast<double>(occurring);
}

std::vector<double> empirical_csmf(std::span<const std::size_t> labels, std::size_t C) {
  std::vector<double> out(C, 0.0);
  if (labels.empty()) return out;
  for (auto y : labels) out.at(y) += 1.0;
  for (double& v : out) v /= static_cast<double>(labels.size());
  return out;
}

}  // namespace bfl
