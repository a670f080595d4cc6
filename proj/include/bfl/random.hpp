#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bfl {

// splitmix64 finalizer; used to derive independent stream seeds from a base
// seed so that chains, domains and folds never share a generator.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // in (0, 1)
  double normal();
  // Log of a Gamma(shape, 1) variate. Stays finite for tiny shapes where the
  // variate itself underflows.
  double log_gamma_variate(double shape);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t uniform_index(std::size_t n);

  std::vector<double> dirichlet(std::span<const double> alpha);
  // Log-probabilities of a Dirichlet draw (entries may be very negative but
  // never -inf for positive concentrations).
  std::vector<double> dirichlet_log(std::span<const double> alpha);

  // Samples an index with probability proportional to exp(log_weights[k]).
  // Entries equal to -inf are never selected.
  std::size_t categorical_log(std::span<const double> log_weights);
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bfl
