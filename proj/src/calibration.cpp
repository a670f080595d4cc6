#include "bfl/calibration.hpp"

#include <cmath>

#include "bfl/error.hpp"
#include "bfl/numeric.hpp"
#include "bfl/parallel.hpp"
#include "bfl/random.hpp"

namespace bfl {
namespace {

double log_gamma_fn(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

// log Dir(x; alpha) with x given in log space.
double dirichlet_logpdf_log(std::span<const double> log_x, std::span<const double> alpha) {
  double a0 = 0.0, out = 0.0;
  for (std::size_t k = 0; k < log_x.size(); ++k) {
    a0 += alpha[k];
    out += (alpha[k] - 1.0) * log_x[k] - log_gamma_fn(alpha[k]);
  }
  return out + log_gamma_fn(a0);
}

struct CalibChain {
  std::vector<double> pi;
  std::vector<double> confusion_sum;
  std::vector<double> gamma_sum;
  std::size_t kept = 0;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
};

}  // namespace

std::size_t PredictionTensor::top(std::size_t i, std::size_t m) const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < C; ++c) {
    if (at(i, c, m) > at(i, best, m)) best = c;
  }
  return best;
}

PredictionTensor build_predictions(const FederationRegistry& reg, const Dataset& target,
                                   const EnsembleConfig& cfg) {
  PredictionTensor out;
  out.n = target.size();
  out.C = target.num_causes();
  out.M = reg.M();
  out.model_ids = reg.domain_ids();
  for (const auto& r : target.records) out.death_ids.push_back(r.death_id);
  out.a.assign(out.n * out.C * out.M, 0.0);
  if (out.n == 0) return out;

  LabelVector labels;
  bool any = false;
  for (const auto& r : target.records) {
    labels.push_back(r.y);
    any = any || r.y.has_value();
  }
  const Dataset unlabeled = strip_labels(target);
  for (std::size_t m = 0; m < out.M; ++m) {
    const FederationRegistry single = make_registry({reg.summaries[m]});
    const PhiTensor phi = build_phi(single, unlabeled, false);
    EnsembleConfig c = cfg;
    c.variant = any ? Variant::Partial : Variant::Plain;
    c.allow_uncovered_causes = true;
    c.seed = mix_seed(cfg.seed, 500 + m);
    const GlobalPosterior post = fit_global(phi, any ? &labels : nullptr, c);
    const Classification cls = classify(phi, post);
    for (std::size_t i = 0; i < out.n; ++i) {
      for (std::size_t k = 0; k < out.C; ++k) {
        out.a[(i * out.C + k) * out.M + m] = cls.prob(i, k);
      }
    }
  }
  return out;
}

void CalibConfig::validate() const {
  if (!(alpha > 0.0) || !(beta_rate > 0.0) || !(epsilon > 0.0)) {
    fail(ErrorCode::InvalidConfig, "alpha, beta_rate and epsilon must be > 0");
  }
  if (iterations == 0 || burn_in >= iterations) {
    fail(ErrorCode::InvalidConfig, "burn_in must be smaller than iterations");
  }
  if (chains < 1) fail(ErrorCode::InvalidConfig, "chains must be >= 1");
  if (!(log_gamma_step > 0.0)) fail(ErrorCode::InvalidConfig, "log_gamma_step must be > 0");
}

std::vector<double> CalibrationPosterior::pi_mean() const {
  std::vector<double> out(C, 0.0);
  for (std::size_t d = 0; d < draws(); ++d) {
    for (std::size_t c = 0; c < C; ++c) out[c] += pi(d, c);
  }
  for (double& v : out) v /= static_cast<double>(draws());
  return out;
}

std::vector<double> CalibrationPosterior::pi_quantile(double q) const {
  std::vector<double> out(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> col(draws());
    for (std::size_t d = 0; d < draws(); ++d) col[d] = pi(d, c);
    out[c] = quantile(std::move(col), q);
  }
  return out;
}

CalibrationPosterior fit_calibration(const PredictionTensor& a, const LabelVector& labels,
                                     const CalibConfig& cfg) {
  cfg.validate();
  if (a.C == 0 || a.M == 0 || a.a.size() != a.n * a.C * a.M) {
    fail(ErrorCode::EmptyPredictions, "prediction tensor is empty or inconsistent");
  }
  if (labels.size() != a.n) fail(ErrorCode::LengthMismatch, "labels length differs from n");
  const std::size_t C = a.C, M = a.M;

  std::vector<std::size_t> top(a.n * M);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t m = 0; m < M; ++m) top[i * M + m] = a.top(i, m);
  }
  // labeled (true cause, predicted cause) counts per model
  std::vector<double> counts(M * C * C, 0.0);
  std::vector<std::size_t> unlabeled;
  for (std::size_t i = 0; i < a.n; ++i) {
    if (!labels[i]) {
      unlabeled.push_back(i);
      continue;
    }
    if (*labels[i] >= C) fail(ErrorCode::InvalidLabels, "label out of range");
    for (std::size_t m = 0; m < M; ++m) counts[(m * C + *labels[i]) * C + top[i * M + m]] += 1.0;
  }

  std::vector<CalibChain> chains(cfg.chains);
  parallel_for(cfg.chains, cfg.workers, [&](std::size_t chain) {
    Rng rng(mix_seed(cfg.seed, 3000 + chain));
    CalibChain& out = chains[chain];
    out.confusion_sum.assign(M * C * C, 0.0);
    out.gamma_sum.assign(M * C, 0.0);
    std::vector<double> gamma(M * C, cfg.gamma_prior_mean());
    std::vector<double> log_conf(M * C * C);
    std::vector<double> pi(C, 1.0 / static_cast<double>(C));
    std::vector<double> alpha(C), w(C), latent(C);

    const auto prior_row = [&](std::size_t c, double g, std::vector<double>& row) {
      for (std::size_t k = 0; k < C; ++k) row[k] = g * ((k == c ? 1.0 : 0.0) + cfg.epsilon);
    };

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t row = (m * C + c) * C;
          prior_row(c, gamma[m * C + c], alpha);
          for (std::size_t k = 0; k < C; ++k) alpha[k] += counts[row + k];
          const auto draw = rng.dirichlet_log(alpha);
          std::copy(draw.begin(), draw.end(), log_conf.begin() + static_cast<std::ptrdiff_t>(row));

          // Metropolis on log gamma given the row
          const auto log_row = std::span<const double>(log_conf).subspan(row, C);
          const auto log_target = [&](double g) {
            prior_row(c, g, alpha);
            return (cfg.alpha - 1.0) * std::log(g) - cfg.beta_rate * g +
                   dirichlet_logpdf_log(log_row, alpha) + std::log(g);
          };
          const double g0 = gamma[m * C + c];
          const double g1 = g0 * std::exp(cfg.log_gamma_step * rng.normal());
          ++out.proposed;
          if (std::log(rng.uniform()) < log_target(g1) - log_target(g0)) {
            gamma[m * C + c] = g1;
            ++out.accepted;
          }
        }
      }

      std::fill(latent.begin(), latent.end(), 0.0);
      for (auto i : unlabeled) {
        for (std::size_t c = 0; c < C; ++c) {
          double v = std::log(pi[c]);
          for (std::size_t m = 0; m < M; ++m) v += log_conf[(m * C + c) * C + top[i * M + m]];
          w[c] = v;
        }
        latent[rng.categorical_log(w)] += 1.0;
      }
      for (std::size_t c = 0; c < C; ++c) alpha[c] = 1.0 + latent[c];
      pi = rng.dirichlet(alpha);

      if (iter >= cfg.burn_in) {
        ++out.kept;
        out.pi.insert(out.pi.end(), pi.begin(), pi.end());
        for (std::size_t k = 0; k < M * C * C; ++k) out.confusion_sum[k] += std::exp(log_conf[k]);
        for (std::size_t k = 0; k < M * C; ++k) out.gamma_sum[k] += gamma[k];
      }
    }
  });

  CalibrationPosterior post;
  post.C = C;
  post.M = M;
  post.config = cfg;
  post.model_ids = a.model_ids;
  post.n_unlabeled = unlabeled.size();
  post.n_labeled = a.n - unlabeled.size();
  post.confusion_mean.assign(M * C * C, 0.0);
  post.gamma_mean.assign(M * C, 0.0);
  std::size_t kept = 0, accepted = 0, proposed = 0;
  for (const auto& ch : chains) {
    post.pi_draws.insert(post.pi_draws.end(), ch.pi.begin(), ch.pi.end());
    for (std::size_t k = 0; k < M * C * C; ++k) post.confusion_mean[k] += ch.confusion_sum[k];
    for (std::size_t k = 0; k < M * C; ++k) post.gamma_mean[k] += ch.gamma_sum[k];
    kept += ch.kept;
    accepted += ch.accepted;
    proposed += ch.proposed;
  }
  for (double& v : post.confusion_mean) v /= static_cast<double>(kept);
  for (double& v : post.gamma_mean) v /= static_cast<double>(kept);
  post.gamma_acceptance =
      proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  return post;
}

}  // namespace bfl
