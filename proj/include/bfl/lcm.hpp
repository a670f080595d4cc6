#pragma once

// Single-domain latent class model: causes emit a latent class from a
// truncated stick-breaking mixture, and each class carries an independent
// Bernoulli profile over symptoms. Trained by Gibbs sampling on one domain's
// labeled deaths and exported as posterior means.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfl/data.hpp"

namespace bfl {

struct BetaShape {
  double a = 1.0;
  double b = 1.0;
  bool operator==(const BetaShape&) const = default;
};

struct LcmHyper {
  std::size_t K = 5;
  double alpha_sb = 1.0;
  BetaShape theta_prior{1.0, 1.0};
  double pi_prior = 1.0;
  // Spike-and-slab profiles: theta = delta * slab + (1 - delta) * mu.
  bool sparse = false;
  BetaShape spike_omega_prior{1.0, 1.0};
  // A cause is present in a domain when it has at least this many deaths.
  std::size_t presence_min_count = 1;

  void validate() const;
  bool operator==(const LcmHyper&) const = default;
};

struct GibbsConfig {
  std::size_t iterations = 4000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t kept_draws() const { return (iterations - burn_in + thin - 1) / thin; }
};

struct Provenance {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  bool operator==(const Provenance&) const = default;
};

// Sampler state. theta is stored C x K x p, nu C x K, both row-major.
struct LcmState {
  std::vector<double> pi_m;
  std::vector<double> nu;
  std::vector<double> theta;
  std::vector<std::size_t> z;
  // sparse variant only
  std::vector<std::uint8_t> delta;
  std::vector<double> slab;
  std::vector<double> mu;     // C x p
  std::vector<double> omega;  // C
};

// The only artifact that leaves a training domain. Note there is
// deliberately no training-domain CSMF in here.
struct BaseModelSummary {
  std::string domain_id;
  std::size_t C = 0;
  std::size_t K = 0;
  std::size_t p = 0;
  std::string cause_list_fingerprint;
  std::string dict_fingerprint;
  std::vector<std::uint8_t> present;
  std::vector<std::size_t> n_by_cause;
  std::vector<double> nu_bar;     // C x K; rows of absent causes are zero
  std::vector<double> theta_bar;  // C x K x p; rows of absent causes are zero
  LcmHyper hyper;
  Provenance provenance;

  double nu(std::size_t c, std::size_t k) const { return nu_bar[c * K + k]; }
  double theta(std::size_t c, std::size_t k, std::size_t j) const {
    return theta_bar[(c * K + k) * p + j];
  }
  bool is_present(std::size_t c) const { return present[c] != 0; }

  // Throws InvalidSummary on any broken invariant. `simplex_tol` bounds the
  // deviation of present nu rows from one.
  void validate(double simplex_tol = 1e-6) const;

  bool operator==(const BaseModelSummary&) const = default;
};

BaseModelSummary train_lcm(const Dataset& labeled, const LcmHyper& hyper,
                           const GibbsConfig& cfg);

// Precomputed log-parameters of one summary for repeated likelihood
// evaluation.
class CondLikelihood {
 public:
  explicit CondLikelihood(const BaseModelSummary& s);

  // log p(x | Y = c); Missing entries are skipped.
  double operator()(std::span<const SymptomValue> x, std::size_t c) const;
  bool is_present(std::size_t c) const { return present_[c] != 0; }

 private:
  std::size_t C_, K_, p_;
  std::vector<std::uint8_t> present_;
  std::vector<double> log_nu_;
  std::vector<double> log_theta_;
  std::vector<double> log_one_minus_theta_;
};

double cond_loglik(const BaseModelSummary& s, std::span<const SymptomValue> x,
                   std::size_t c);

// Sum over all 2^p fully observed symptom vectors of p(x | Y = c).
double enumerate_mass(const BaseModelSummary& s, std::size_t c);

}  // namespace bfl
