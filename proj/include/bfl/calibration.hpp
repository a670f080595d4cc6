#pragma once

// Confusion-matrix calibration baseline. Each base model is run as a
// single-model classifier on the target; its top-cause predictions are then
// calibrated with per-model misclassification matrices learned from the
// target's labeled deaths under a shrink-to-identity prior
//   M_c. ~ Dir(gamma_c (e_c + eps 1)),  gamma_c ~ Gamma(alpha, rate beta).
// This is the hard-classification form: rows are conjugate given gamma.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bfl/data.hpp"
#include "bfl/ensemble.hpp"
#include "bfl/summary_io.hpp"

namespace bfl {

struct PredictionTensor {
  std::size_t n = 0;
  std::size_t C = 0;
  std::size_t M = 0;
  std::vector<double> a;  // n x C x M; a[i][.][m] is a simplex
  std::vector<std::string> death_ids;
  std::vector<std::string> model_ids;

  double at(std::size_t i, std::size_t c, std::size_t m) const { return a[(i * C + c) * M + m]; }
  // argmax over causes of model m's prediction for death i (lowest index on ties)
  std::size_t top(std::size_t i, std::size_t m) const;
};

// Runs every base model as its own single-model semi-supervised fit on the
// whole target (labels used as partial labels) and records its posterior
// predictive cause probabilities. Causes a model never saw get probability 0.
PredictionTensor build_predictions(const FederationRegistry& reg, const Dataset& target,
                                   const EnsembleConfig& cfg);

struct CalibConfig {
  double alpha = 5.0;
  double beta_rate = 0.5;
  double epsilon = 0.01;
  std::size_t iterations = 4000;
  std::size_t burn_in = 2000;
  std::size_t chains = 3;
  std::uint64_t seed = 1;
  double log_gamma_step = 0.3;
  std::size_t workers = 1;

  void validate() const;
  double gamma_prior_mean() const { return alpha / beta_rate; }
};

struct CalibrationPosterior {
  std::size_t C = 0;
  std::size_t M = 0;
  std::vector<double> pi_draws;        // D x C
  std::vector<double> confusion_mean;  // M x C x C, row = true cause
  std::vector<double> gamma_mean;      // M x C
  double gamma_acceptance = 0.0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  CalibConfig config;
  std::vector<std::string> model_ids;

  std::size_t draws() const { return C == 0 ? 0 : pi_draws.size() / C; }
  double pi(std::size_t d, std::size_t c) const { return pi_draws[d * C + c]; }
  std::vector<double> pi_mean() const;
  std::vector<double> pi_quantile(double q) const;
  double confusion(std::size_t m, std::size_t c, std::size_t c2) const {
    return confusion_mean[(m * C + c) * C + c2];
  }
};

// `labels` has one entry per death; deaths without a label carry a latent
// true cause. With no labels at all the confusion matrices follow the prior.
CalibrationPosterior fit_calibration(const PredictionTensor& a, const LabelVector& labels,
                                     const CalibConfig& cfg);

}  // namespace bfl
