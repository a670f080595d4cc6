#pragma once

// Global ensemble over frozen per-domain conditional likelihoods.
//
// Target deaths follow Y ~ Cat(pi), H | Y=c ~ Cat(lambda_c) and
// p(x | Y=c, H=m) = p_m(x | Y=c), where p_m comes from the m-th exported base
// model. Only (c, m) pairs where domain m observed cause c carry weight.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfl/data.hpp"
#include "bfl/lcm.hpp"
#include "bfl/summary_io.hpp"

namespace bfl {

// log p_m(x_i | Y = c) for every death, cause and model; -inf where the model
// has no estimate for the cause.
struct PhiTensor {
  std::size_t n = 0;
  std::size_t C = 0;
  std::size_t M = 0;
  std::vector<double> log_phi;        // n x C x M
  std::vector<std::uint8_t> present;  // C x M
  std::vector<std::string> death_ids;
  std::vector<std::string> model_ids;

  double at(std::size_t i, std::size_t c, std::size_t m) const {
    return log_phi[(i * C + c) * M + m];
  }
  bool allowed(std::size_t c, std::size_t m) const { return present[c * M + m] != 0; }
  std::vector<std::size_t> coverage() const;
};

PhiTensor build_phi(const FederationRegistry& reg, const Dataset& target,
                    bool require_complete = true);

enum class Variant { Plain, Partial, Domain, Mix };
enum class LambdaPriorKind { Dirichlet, LogisticNormal };
enum class Estimand { FullTarget, UnlabeledSubset };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(Estimand e);
Estimand estimand_from_string(const std::string& s);

struct LambdaPrior {
  LambdaPriorKind kind = LambdaPriorKind::Dirichlet;
  double conc = 1.0;   // Dirichlet concentration
  double sigma = 1.0;  // logistic-normal scale (Sigma = sigma^2 I)
};

struct EnsembleConfig {
  Variant variant = Variant::Plain;
  // Labeled deaths share the unlabeled CSMF (labels are a random sample).
  bool tie_pi = true;
  LambdaPrior lambda_prior;
  double pi_prior_conc = 1.0;
  std::size_t chains = 4;
  std::size_t iterations = 4000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  double mix_split_fraction = 0.5;
  double mh_step = 0.25;
  std::size_t workers = 1;
  // Lets causes without any model estimate through the sampler; they are then
  // informed by the prior and by labels only. Used for single-model runs.
  bool allow_uncovered_causes = false;

  void validate() const;
};

using LabelVector = std::vector<std::optional<std::size_t>>;

struct GlobalPosterior {
  std::size_t C = 0;
  std::size_t M = 0;
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::vector<double> pi_draws;        // D x C
  std::vector<double> pi_tilde_draws;  // D x C, empty when no labels
  std::vector<double> lambda_draws;    // D x C x M
  std::vector<double> log_density;     // D, up to an additive constant
  std::optional<double> acceptance_rate;
  std::vector<double> rhat;  // split-chain PSRF per cause of pi
  std::vector<std::string> warnings;
  EnsembleConfig config;
  std::vector<std::string> model_ids;

  std::size_t draws() const { return chains * draws_per_chain; }
  double pi(std::size_t d, std::size_t c) const { return pi_draws[d * C + c]; }
  double lambda(std::size_t d, std::size_t c, std::size_t m) const {
    return lambda_draws[(d * C + c) * M + m];
  }
  std::vector<double> pi_mean() const;
  std::vector<double> pi_quantile(double q) const;
  std::vector<double> lambda_mean() const;  // C x M
};

GlobalPosterior fit_global(const PhiTensor& phi, const LabelVector* labels,
                           const EnsembleConfig& cfg);

struct Classification {
  std::size_t C = 0;
  std::vector<std::string> death_ids;
  std::vector<double> probs;  // n x C
  std::vector<std::size_t> top;

  std::size_t size() const { return death_ids.size(); }
  double prob(std::size_t i, std::size_t c) const { return probs[i * C + c]; }
};

Classification classify(const PhiTensor& phi, const GlobalPosterior& post);

// Lowest index wins exact ties.
std::size_t argmax_lowest(std::span<const double> row);

std::vector<double> adjust_csmf(std::span<const double> pi_hat, std::size_t n0,
                                std::span<const std::size_t> heldout_counts);

// log prod_i p(x_i) under (pi, lambda); labeled deaths contribute
// log(pi_tilde_y * sum_m lambda_ym phi_iym). pi_tilde defaults to pi.
double marginal_loglik(const PhiTensor& phi, std::span<const double> pi,
                       std::span<const double> lambda, const LabelVector* labels = nullptr,
                       std::span<const double> pi_tilde = {});

// Split-chain potential scale reduction of one scalar across chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct VariantConfig {
  EnsembleConfig ensemble;
  LcmHyper local_hyper;
  GibbsConfig local_gibbs;
  Estimand estimand = Estimand::FullTarget;
};

struct VariantResult {
  GlobalPosterior posterior;
  PhiTensor phi;
  // Covers every target death in input order; labeled deaths carry their
  // known label as a one-hot row except under the plain variant.
  Classification classification;
  std::vector<std::uint8_t> was_labeled;
  std::vector<double> csmf;
  std::vector<std::size_t> heldout_counts;
  std::optional<BaseModelSummary> local_model;
};

// `reg` may be empty only for the domain variant (local model alone).
VariantResult run_variant(const FederationRegistry& reg, const Dataset& target,
                          const VariantConfig& cfg);

}  // namespace bfl
