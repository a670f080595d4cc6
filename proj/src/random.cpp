#include "bfl/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bfl/numeric.hpp"

namespace bfl {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  // 53 random bits mapped to the open interval (0, 1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::log_gamma_variate(double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    double g = dist(engine_);
    while (g <= 0.0) g = dist(engine_);
    return std::log(g);
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  double g = dist(engine_);
  while (g <= 0.0) g = dist(engine_);
  return std::log(g) + std::log(uniform()) / shape;
}

double Rng::beta(double a, double b) {
  const double lx = log_gamma_variate(a);
  const double ly = log_gamma_variate(b);
  return 1.0 / (1.0 + std::exp(ly - lx));
}

std::size_t Rng::uniform_index(std::size_t n) {
  const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(k, n - 1);
}

std::vector<double> Rng::dirichlet_log(std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) out[k] = log_gamma_variate(alpha[k]);
  const double norm = log_sum_exp(out);
  for (double& v : out) v -= norm;
  return out;
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
  std::vector<double> out = dirichlet_log(alpha);
  double s = 0.0;
  for (double& v : out) {
    v = std::exp(v);
    s += v;
  }
  for (double& v : out) v /= s;
  return out;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  double hi = kNegInf;
  for (double v : log_weights) hi = std::max(hi, v);
  double total = 0.0;
  for (double v : log_weights) total += (v == kNegInf) ? 0.0 : std::exp(v - hi);
  double u = uniform() * total;
  std::size_t last = 0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    if (log_weights[k] == kNegInf) continue;
    last = k;
    u -= std::exp(log_weights[k] - hi);
    if (u <= 0.0) return k;
  }
  return last;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform() * total;
  std::size_t last = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last = k;
    u -= weights[k];
    if (u <= 0.0) return k;
  }
  return last;
}

}  // namespace bfl
