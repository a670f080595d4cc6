#include "bfl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

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

// log Dir(x; alpha) for a full simplex x.
double dirichlet_logpdf(std::span<const double> x, std::span<const double> alpha) {
  double a0 = 0.0, out = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    a0 += alpha[k];
    out += (alpha[k] - 1.0) * std::log(x[k]) - log_gamma_fn(alpha[k]);
  }
  return out + log_gamma_fn(a0);
}

struct ChainOutput {
  std::vector<double> pi;
  std::vector<double> pi_tilde;
  std::vector<double> lambda;
  std::vector<double> log_density;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
};

struct SamplerLayout {
  std::vector<std::vector<std::size_t>> allowed;  // per cause, model indices
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

SamplerLayout make_layout(const PhiTensor& phi) {
  SamplerLayout out;
  out.allowed.resize(phi.C);
  for (std::size_t c = 0; c < phi.C; ++c) {
    for (std::size_t m = 0; m < phi.M; ++m) {
      if (!phi.allowed(c, m)) continue;
      out.allowed[c].push_back(m);
      out.pairs.emplace_back(c, m);
    }
  }
  return out;
}

class ChainSampler {
 public:
  ChainSampler(const PhiTensor& phi, const LabelVector* labels, const EnsembleConfig& cfg,
               const SamplerLayout& layout, bool has_labels)
      : phi_(phi), labels_(labels), cfg_(cfg), layout_(layout), has_labels_(has_labels),
        C_(phi.C), M_(phi.M) {}

  ChainOutput run(std::uint64_t seed) {
    Rng rng(seed);
    ChainOutput out;
    pi_.assign(C_, 1.0 / static_cast<double>(C_));
    pi_tilde_ = pi_;
    lambda_.assign(C_ * M_, 0.0);
    beta_.assign(C_ * M_, 0.0);
    for (std::size_t c = 0; c < C_; ++c) {
      for (auto m : layout_.allowed[c]) {
        lambda_[c * M_ + m] = 1.0 / static_cast<double>(layout_.allowed[c].size());
      }
    }
    step_ = cfg_.mh_step;

    std::vector<double> unl(C_), lab(C_), h(C_ * M_);
    std::vector<double> buf(std::max<std::size_t>(layout_.pairs.size(), M_) + 1);
    std::vector<double> lp(C_), lpt(C_), ll(C_ * M_);
    std::ptrdiff_t pending = -1;  // draw whose likelihood the next sweep yields
    double pending_prior = 0.0;
    std::size_t window_acc = 0, window_prop = 0;

    for (std::size_t iter = 0; iter < cfg_.iterations; ++iter) {
      for (std::size_t c = 0; c < C_; ++c) {
        lp[c] = std::log(pi_[c]);
        lpt[c] = cfg_.tie_pi ? lp[c] : std::log(pi_tilde_[c]);
      }
      for (std::size_t i = 0; i < C_ * M_; ++i) {
        ll[i] = lambda_[i] > 0.0 ? std::log(lambda_[i]) : kNegInf;
      }
      std::fill(unl.begin(), unl.end(), 0.0);
      std::fill(lab.begin(), lab.end(), 0.0);
      std::fill(h.begin(), h.end(), 0.0);
      double loglik = 0.0;

      for (std::size_t i = 0; i < phi_.n; ++i) {
        const std::optional<std::size_t> y = labels_ ? (*labels_)[i] : std::nullopt;
        if (y) {
          const std::size_t c = *y;
          const auto& models = layout_.allowed[c];
          lab[c] += 1.0;
          loglik += lpt[c];
          if (models.empty()) continue;
          double hi = kNegInf;
          for (std::size_t r = 0; r < models.size(); ++r) {
            buf[r] = ll[c * M_ + models[r]] + phi_.at(i, c, models[r]);
            hi = std::max(hi, buf[r]);
          }
          double total = 0.0;
          for (std::size_t r = 0; r < models.size(); ++r) {
            buf[r] = std::exp(buf[r] - hi);
            total += buf[r];
          }
          loglik += hi + std::log(total);
          h[c * M_ + models[pick(rng, buf, models.size(), total)]] += 1.0;
        } else {
          const auto& pairs = layout_.pairs;
          double hi = kNegInf;
          for (std::size_t r = 0; r < pairs.size(); ++r) {
            const auto [c, m] = pairs[r];
            buf[r] = lp[c] + ll[c * M_ + m] + phi_.at(i, c, m);
            hi = std::max(hi, buf[r]);
          }
          double total = 0.0;
          for (std::size_t r = 0; r < pairs.size(); ++r) {
            buf[r] = std::exp(buf[r] - hi);
            total += buf[r];
          }
          loglik += hi + std::log(total);
          const auto [c, m] = pairs[pick(rng, buf, pairs.size(), total)];
          unl[c] += 1.0;
          h[c * M_ + m] += 1.0;
        }
      }
      if (pending >= 0) out.log_density[static_cast<std::size_t>(pending)] = pending_prior + loglik;

      update_pi(rng, unl, lab);
      const auto [acc, prop] = update_lambda(rng, h);
      if (iter < cfg_.burn_in) {
        window_acc += acc;
        window_prop += prop;
        if ((iter + 1) % 50 == 0 && cfg_.lambda_prior.kind == LambdaPriorKind::LogisticNormal &&
            window_prop > 0) {
          const double rate = static_cast<double>(window_acc) / static_cast<double>(window_prop);
          if (rate < 0.2) step_ *= 0.7;
          if (rate > 0.4) step_ *= 1.3;
          window_acc = window_prop = 0;
        }
      } else {
        out.accepted += acc;
        out.proposed += prop;
      }

      if (iter >= cfg_.burn_in && (iter - cfg_.burn_in) % cfg_.thin == 0) {
        out.pi.insert(out.pi.end(), pi_.begin(), pi_.end());
        if (has_labels_) out.pi_tilde.insert(out.pi_tilde.end(), pi_tilde_.begin(), pi_tilde_.end());
        out.lambda.insert(out.lambda.end(), lambda_.begin(), lambda_.end());
        out.log_density.push_back(0.0);
        pending = static_cast<std::ptrdiff_t>(out.log_density.size() - 1);
        pending_prior = log_prior();
      } else {
        pending = -1;
      }
    }
    if (pending >= 0) {
      out.log_density[static_cast<std::size_t>(pending)] =
          pending_prior + marginal_loglik(phi_, pi_, lambda_, labels_,
                                          cfg_.tie_pi ? std::span<const double>(pi_)
                                                      : std::span<const double>(pi_tilde_));
    }
    return out;
  }

 private:
  std::size_t pick(Rng& rng, const std::vector<double>& w, std::size_t count, double total) {
    double u = rng.uniform() * total;
    for (std::size_t r = 0; r < count; ++r) {
      u -= w[r];
      if (u <= 0.0) return r;
    }
    for (std::size_t r = count; r-- > 0;) {
      if (w[r] > 0.0) return r;
    }
    return 0;
  }

  void update_pi(Rng& rng, const std::vector<double>& unl, const std::vector<double>& lab) {
    std::vector<double> conc(C_);
    const double a = cfg_.pi_prior_conc;
    if (cfg_.tie_pi) {
      for (std::size_t c = 0; c < C_; ++c) conc[c] = a + unl[c] + lab[c];
      pi_ = rng.dirichlet(conc);
      pi_tilde_ = pi_;
      return;
    }
    for (std::size_t c = 0; c < C_; ++c) conc[c] = a + unl[c];
    pi_ = rng.dirichlet(conc);
    if (has_labels_) {
      for (std::size_t c = 0; c < C_; ++c) conc[c] = a + lab[c];
      pi_tilde_ = rng.dirichlet(conc);
    }
  }

  std::pair<std::size_t, std::size_t> update_lambda(Rng& rng, const std::vector<double>& h) {
    std::size_t accepted = 0, proposed = 0;
    for (std::size_t c = 0; c < C_; ++c) {
      const auto& models = layout_.allowed[c];
      if (models.size() < 2) continue;
      if (cfg_.lambda_prior.kind == LambdaPriorKind::Dirichlet) {
        std::vector<double> conc(models.size());
        for (std::size_t r = 0; r < models.size(); ++r) {
          conc[r] = cfg_.lambda_prior.conc + h[c * M_ + models[r]];
        }
        const auto draw = rng.dirichlet(conc);
        for (std::size_t r = 0; r < models.size(); ++r) lambda_[c * M_ + models[r]] = draw[r];
        continue;
      }
      // random-walk Metropolis on the logistic-normal coordinates of cause c
      std::vector<double> current(models.size()), proposal(models.size());
      for (std::size_t r = 0; r < models.size(); ++r) {
        current[r] = beta_[c * M_ + models[r]];
        proposal[r] = current[r] + step_ * rng.normal();
      }
      const double log_ratio =
          logistic_target(proposal, c, h) - logistic_target(current, c, h);
      ++proposed;
      if (std::log(rng.uniform()) < log_ratio) {
        ++accepted;
        for (std::size_t r = 0; r < models.size(); ++r) beta_[c * M_ + models[r]] = proposal[r];
      }
      std::vector<double> b(models.size());
      for (std::size_t r = 0; r < models.size(); ++r) b[r] = beta_[c * M_ + models[r]];
      const double norm = log_sum_exp(b);
      for (std::size_t r = 0; r < models.size(); ++r) {
        lambda_[c * M_ + models[r]] = std::exp(b[r] - norm);
      }
    }
    return {accepted, proposed};
  }

  double logistic_target(const std::vector<double>& b, std::size_t c,
                         const std::vector<double>& h) const {
    const auto& models = layout_.allowed[c];
    const double s2 = cfg_.lambda_prior.sigma * cfg_.lambda_prior.sigma;
    const double norm = log_sum_exp(b);
    double out = 0.0;
    for (std::size_t r = 0; r < models.size(); ++r) {
      out += -0.5 * b[r] * b[r] / s2 + h[c * M_ + models[r]] * (b[r] - norm);
    }
    return out;
  }

  double log_prior() const {
    std::vector<double> alpha(C_, cfg_.pi_prior_conc);
    double out = dirichlet_logpdf(pi_, alpha);
    if (has_labels_ && !cfg_.tie_pi) out += dirichlet_logpdf(pi_tilde_, alpha);
    for (std::size_t c = 0; c < C_; ++c) {
      const auto& models = layout_.allowed[c];
      if (models.size() < 2) continue;
      if (cfg_.lambda_prior.kind == LambdaPriorKind::Dirichlet) {
        std::vector<double> x(models.size()), a(models.size(), cfg_.lambda_prior.conc);
        for (std::size_t r = 0; r < models.size(); ++r) x[r] = lambda_[c * M_ + models[r]];
        out += dirichlet_logpdf(x, a);
      } else {
        const double s2 = cfg_.lambda_prior.sigma * cfg_.lambda_prior.sigma;
        for (auto m : models) out += -0.5 * beta_[c * M_ + m] * beta_[c * M_ + m] / s2;
      }
    }
    return out;
  }

  const PhiTensor& phi_;
  const LabelVector* labels_;
  const EnsembleConfig& cfg_;
  const SamplerLayout& layout_;
  bool has_labels_;
  std::size_t C_, M_;
  std::vector<double> pi_, pi_tilde_, lambda_, beta_;
  double step_ = 0.25;
};

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::Partial: return "partial";
    case Variant::Domain: return "domain";
    case Variant::Mix: return "mix";
  }
  return "plain";
}

Variant variant_from_string(const std::string& s) {
  if (s == "plain") return Variant::Plain;
  if (s == "partial") return Variant::Partial;
  if (s == "domain") return Variant::Domain;
  if (s == "mix") return Variant::Mix;
  fail(ErrorCode::InvalidConfig, "unknown variant '" + s + "'");
}

std::string to_string(Estimand e) {
  return e == Estimand::FullTarget ? "full_target" : "unlabeled_subset";
}

Estimand estimand_from_string(const std::string& s) {
  if (s == "full_target") return Estimand::FullTarget;
  if (s == "unlabeled_subset") return Estimand::UnlabeledSubset;
  fail(ErrorCode::InvalidConfig, "unknown estimand '" + s + "'");
}

std::vector<std::size_t> PhiTensor::coverage() const {
  std::vector<std::size_t> cov(C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t m = 0; m < M; ++m) cov[c] += allowed(c, m) ? 1 : 0;
  }
  return cov;
}

PhiTensor build_phi(const FederationRegistry& reg, const Dataset& target,
                    bool require_complete) {
  if (reg.M() == 0) fail(ErrorCode::EmptyRegistry, "registry has no models");
  if (target.dict.fingerprint() != reg.dict_fingerprint) {
    fail(ErrorCode::FingerprintMismatch, "target symptom dictionary differs from registry");
  }
  if (target.causes.fingerprint() != reg.cause_list_fingerprint) {
    fail(ErrorCode::FingerprintMismatch, "target cause list differs from registry");
  }
  if (require_complete && !reg.complete()) {
    std::string names;
    for (auto c : reg.uncovered()) names += (names.empty() ? "" : ", ") + target.causes[c];
    fail(ErrorCode::IncompleteRegistry, "no model covers cause(s): " + names);
  }
  PhiTensor phi;
  phi.n = target.size();
  phi.C = reg.C();
  phi.M = reg.M();
  phi.model_ids = reg.domain_ids();
  phi.present.assign(phi.C * phi.M, 0);
  phi.log_phi.assign(phi.n * phi.C * phi.M, kNegInf);
  for (const auto& r : target.records) phi.death_ids.push_back(r.death_id);
  for (std::size_t m = 0; m < phi.M; ++m) {
    const auto& s = reg.summaries[m];
    const CondLikelihood lik(s);
    for (std::size_t c = 0; c < phi.C; ++c) {
      if (!s.is_present(c)) continue;
      phi.present[c * phi.M + m] = 1;
      for (std::size_t i = 0; i < phi.n; ++i) {
        phi.log_phi[(i * phi.C + c) * phi.M + m] = lik(target.records[i].x, c);
      }
    }
  }
  return phi;
}

void EnsembleConfig::validate() const {
  const auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
  if (chains < 1) bad("chains must be >= 1");
  if (iterations == 0 || burn_in >= iterations) bad("burn_in must be smaller than iterations");
  if (thin < 1) bad("thin must be >= 1");
  if (!(mix_split_fraction > 0.0 && mix_split_fraction < 1.0)) {
    bad("mix_split_fraction must lie in (0,1)");
  }
  if (!(pi_prior_conc > 0.0)) bad("pi_prior_conc must be > 0");
  if (!(lambda_prior.conc > 0.0) || !(lambda_prior.sigma > 0.0)) bad("lambda prior must be > 0");
  if (!(mh_step > 0.0)) bad("mh_step must be > 0");
}

GlobalPosterior fit_global(const PhiTensor& phi, const LabelVector* labels,
                           const EnsembleConfig& cfg) {
  cfg.validate();
  if (phi.log_phi.size() != phi.n * phi.C * phi.M || phi.present.size() != phi.C * phi.M) {
    fail(ErrorCode::DimensionMismatch, "phi tensor is inconsistent");
  }
  const auto layout = make_layout(phi);
  if (!cfg.allow_uncovered_causes) {
    for (std::size_t c = 0; c < phi.C; ++c) {
      if (layout.allowed[c].empty()) {
        fail(ErrorCode::IncompletePhi, "cause " + std::to_string(c) + " has no model");
      }
    }
  }
  if (layout.pairs.empty()) fail(ErrorCode::IncompletePhi, "no (cause, model) pair is usable");

  bool has_labels = false;
  if (labels) {
    if (labels->size() != phi.n) {
      fail(ErrorCode::InvalidLabels, "label vector length differs from number of deaths");
    }
    for (std::size_t i = 0; i < phi.n; ++i) {
      const auto& y = (*labels)[i];
      if (!y) continue;
      has_labels = true;
      if (*y >= phi.C) fail(ErrorCode::InvalidLabels, "label out of range for " + phi.death_ids[i]);
      if (layout.allowed[*y].empty()) {
        if (cfg.allow_uncovered_causes) continue;
        fail(ErrorCode::InvalidLabels, "no model covers the label of " + phi.death_ids[i]);
      }
      bool finite = false;
      for (auto m : layout.allowed[*y]) finite = finite || std::isfinite(phi.at(i, *y, m));
      if (!finite) {
        fail(ErrorCode::InvalidLabels, "labeled death " + phi.death_ids[i] +
                                           " has no finite likelihood for its label");
      }
    }
    if (has_labels && (cfg.variant == Variant::Plain || cfg.variant == Variant::Domain)) {
      fail(ErrorCode::InvalidLabels, "labels are only used by the partial and mix variants");
    }
  }

  std::vector<ChainOutput> chains(cfg.chains);
  parallel_for(cfg.chains, cfg.workers, [&](std::size_t k) {
    ChainSampler sampler(phi, has_labels ? labels : nullptr, cfg, layout, has_labels);
    chains[k] = sampler.run(mix_seed(cfg.seed, 1000 + k));
  });

  GlobalPosterior post;
  post.C = phi.C;
  post.M = phi.M;
  post.chains = cfg.chains;
  post.draws_per_chain = chains.front().log_density.size();
  post.config = cfg;
  post.model_ids = phi.model_ids;
  std::size_t accepted = 0, proposed = 0;
  for (auto& ch : chains) {
    post.pi_draws.insert(post.pi_draws.end(), ch.pi.begin(), ch.pi.end());
    post.pi_tilde_draws.insert(post.pi_tilde_draws.end(), ch.pi_tilde.begin(), ch.pi_tilde.end());
    post.lambda_draws.insert(post.lambda_draws.end(), ch.lambda.begin(), ch.lambda.end());
    post.log_density.insert(post.log_density.end(), ch.log_density.begin(), ch.log_density.end());
    accepted += ch.accepted;
    proposed += ch.proposed;
  }
  if (cfg.lambda_prior.kind == LambdaPriorKind::LogisticNormal) {
    post.acceptance_rate =
        proposed == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }

  post.rhat.resize(phi.C);
  for (std::size_t c = 0; c < phi.C; ++c) {
    std::vector<std::vector<double>> traces(cfg.chains);
    for (std::size_t k = 0; k < cfg.chains; ++k) {
      for (std::size_t d = 0; d < post.draws_per_chain; ++d) {
        traces[k].push_back(chains[k].pi[d * phi.C + c]);
      }
    }
    post.rhat[c] = split_rhat(traces);
    if (std::isfinite(post.rhat[c]) && post.rhat[c] > 1.1) {
      post.warnings.push_back("split R-hat " + std::to_string(post.rhat[c]) + " > 1.1 for cause " +
                              std::to_string(c));
    }
  }
  return post;
}

std::vector<double> GlobalPosterior::pi_mean() const {
  std::vector<double> out(C, 0.0);
  const std::size_t D = draws();
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t c = 0; c < C; ++c) out[c] += pi(d, c);
  }
  for (double& v : out) v /= static_cast<double>(D);
  return out;
}

std::vector<double> GlobalPosterior::pi_quantile(double q) const {
  std::vector<double> out(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> col(draws());
    for (std::size_t d = 0; d < draws(); ++d) col[d] = pi(d, c);
    out[c] = quantile(std::move(col), q);
  }
  return out;
}

std::vector<double> GlobalPosterior::lambda_mean() const {
  std::vector<double> out(C * M, 0.0);
  const std::size_t D = draws();
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = 0; i < C * M; ++i) out[i] += lambda_draws[d * C * M + i];
  }
  for (double& v : out) v /= static_cast<double>(D);
  return out;
}

std::size_t argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

Classification classify(const PhiTensor& phi, const GlobalPosterior& post) {
  if (phi.C != post.C || phi.M != post.M) {
    fail(ErrorCode::DimensionMismatch, "phi and posterior dimensions differ");
  }
  if (post.draws() == 0) fail(ErrorCode::DimensionMismatch, "posterior has no draws");
  const std::size_t C = phi.C, M = phi.M, D = post.draws();
  Classification out;
  out.C = C;
  out.death_ids = phi.death_ids;
  out.probs.assign(phi.n * C, 0.0);
  std::vector<double> lp(C), ll(C * M), w(C), terms(M);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t c = 0; c < C; ++c) lp[c] = std::log(post.pi(d, c));
    for (std::size_t i = 0; i < C * M; ++i) {
      const double lam = post.lambda_draws[d * C * M + i];
      ll[i] = lam > 0.0 ? std::log(lam) : kNegInf;
    }
    for (std::size_t i = 0; i < phi.n; ++i) {
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t used = 0;
        for (std::size_t m = 0; m < M; ++m) {
          if (phi.allowed(c, m)) terms[used++] = ll[c * M + m] + phi.at(i, c, m);
        }
        w[c] = used == 0 ? kNegInf
                         : lp[c] + log_sum_exp(std::span<const double>(terms.data(), used));
      }
      const double norm = log_sum_exp(w);
      for (std::size_t c = 0; c < C; ++c) out.probs[i * C + c] += std::exp(w[c] - norm);
    }
  }
  out.top.resize(phi.n);
  for (std::size_t i = 0; i < phi.n; ++i) {
    auto row = std::span(out.probs).subspan(i * C, C);
    for (double& v : row) v /= static_cast<double>(D);
    out.top[i] = argmax_lowest(row);
  }
  return out;
}

std::vector<double> adjust_csmf(std::span<const double> pi_hat, std::size_t n0,
                                std::span<const std::size_t> heldout_counts) {
  if (!is_simplex(pi_hat, 1e-8)) fail(ErrorCode::NotASimplex, "pi_hat is not a simplex");
  if (heldout_counts.size() != pi_hat.size()) {
    fail(ErrorCode::DimensionMismatch, "heldout counts length differs from pi_hat");
  }
  const std::size_t nh =
      std::accumulate(heldout_counts.begin(), heldout_counts.end(), std::size_t{0});
  if (nh > n0) fail(ErrorCode::CountOverflow, "held-out deaths exceed target size");
  std::vector<double> out(pi_hat.begin(), pi_hat.end());
  if (nh == 0) return out;
  const double keep = static_cast<double>(n0 - nh) / static_cast<double>(n0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = keep * pi_hat[c] + static_cast<double>(heldout_counts[c]) / static_cast<double>(n0);
  }
  return out;
}

double marginal_loglik(const PhiTensor& phi, std::span<const double> pi,
                       std::span<const double> lambda, const LabelVector* labels,
                       std::span<const double> pi_tilde) {
  const std::size_t C = phi.C, M = phi.M;
  if (pi.size() != C || lambda.size() != C * M) {
    fail(ErrorCode::DimensionMismatch, "pi/lambda dimensions do not match phi");
  }
  if (pi_tilde.empty()) pi_tilde = pi;
  if (pi_tilde.size() != C) fail(ErrorCode::DimensionMismatch, "pi_tilde length != C");
  if (labels && labels->size() != phi.n) {
    fail(ErrorCode::DimensionMismatch, "label vector length != n");
  }
  std::vector<double> terms(C * M);
  double total = 0.0;
  for (std::size_t i = 0; i < phi.n; ++i) {
    const std::optional<std::size_t> y = labels ? (*labels)[i] : std::nullopt;
    std::size_t used = 0;
    if (y) {
      const std::size_t c = *y;
      total += std::log(pi_tilde[c]);
      for (std::size_t m = 0; m < M; ++m) {
        if (phi.allowed(c, m)) terms[used++] = std::log(lambda[c * M + m]) + phi.at(i, c, m);
      }
      if (used > 0) total += log_sum_exp(std::span<const double>(terms.data(), used));
      continue;
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t m = 0; m < M; ++m) {
        if (phi.allowed(c, m)) {
          terms[used++] = std::log(pi[c]) + std::log(lambda[c * M + m]) + phi.at(i, c, m);
        }
      }
    }
    total += log_sum_exp(std::span<const double>(terms.data(), used));
  }
  return total;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& ch : chains) {
    const std::size_t half = ch.size() / 2;
    if (half < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(ch.data(), half);
    halves.emplace_back(ch.data() + ch.size() - half, half);
  }
  const std::size_t len = halves.front().size();
  const double n = static_cast<double>(len);
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double within = 0.0;
  for (auto h : halves) {
    const double mu = mean(h);
    means.push_back(mu);
    double ss = 0.0;
    for (double v : h) ss += (v - mu) * (v - mu);
    within += ss / (n - 1.0);
  }
  within /= m;
  const double grand = mean(means);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);
  if (within <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

VariantResult run_variant(const FederationRegistry& reg, const Dataset& target,
                          const VariantConfig& cfg) {
  cfg.ensemble.validate();
  const Variant variant = cfg.ensemble.variant;
  const std::size_t n0 = target.size();
  const std::size_t C = target.num_causes();

  std::vector<std::size_t> labeled, unlabeled;
  for (std::size_t i = 0; i < n0; ++i) {
    (target.records[i].y ? labeled : unlabeled).push_back(i);
  }
  if (reg.M() == 0 && variant != Variant::Domain) {
    fail(ErrorCode::EmptyRegistry, "registry has no models");
  }
  if ((variant == Variant::Domain || variant == Variant::Mix) && labeled.size() < 2 * C) {
    fail(ErrorCode::InsufficientLocalLabels,
         std::to_string(labeled.size()) + " labeled deaths, need at least " +
             std::to_string(2 * C));
  }

  VariantResult out;
  out.was_labeled.assign(n0, 0);
  for (auto i : labeled) out.was_labeled[i] = 1;

  std::vector<std::size_t> local_part;   // trains the local model, held out
  std::vector<std::size_t> partial_part; // enters the global fit with labels
  if (variant == Variant::Partial) partial_part = labeled;
  if (variant == Variant::Domain) local_part = labeled;
  if (variant == Variant::Mix) {
    std::vector<std::size_t> shuffled = labeled;
    Rng rng(mix_seed(cfg.ensemble.seed, 202));
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
    auto n_local = static_cast<std::size_t>(
        std::llround(cfg.ensemble.mix_split_fraction * static_cast<double>(labeled.size())));
    n_local = std::clamp<std::size_t>(n_local, 1, labeled.size() - 1);
    local_part.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_local));
    partial_part.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_local), shuffled.end());
    std::sort(local_part.begin(), local_part.end());
    std::sort(partial_part.begin(), partial_part.end());
  }

  FederationRegistry combined;
  const FederationRegistry* used = &reg;
  if (!local_part.empty()) {
    Dataset local = subset(target, local_part);
    std::string id = target.domain_id.empty() ? "target" : target.domain_id;
    id += "-local";
    const auto existing = reg.domain_ids();
    while (std::find(existing.begin(), existing.end(), id) != existing.end()) id += "_";
    local.domain_id = id;
    GibbsConfig g = cfg.local_gibbs;
    g.seed = mix_seed(cfg.ensemble.seed, 101);
    out.local_model = train_lcm(local, cfg.local_hyper, g);
    std::vector<BaseModelSummary> all = reg.summaries;
    all.push_back(*out.local_model);
    combined = make_registry(std::move(all));
    used = &combined;
  }

  // deaths entering the global fit, in input order
  std::vector<std::size_t> fit_rows;
  LabelVector labels;
  std::vector<std::uint8_t> in_local(n0, 0);
  for (auto i : local_part) in_local[i] = 1;
  for (std::size_t i = 0; i < n0; ++i) {
    if (in_local[i]) continue;
    fit_rows.push_back(i);
    const bool use_label = variant == Variant::Partial || variant == Variant::Mix;
    labels.push_back(use_label ? target.records[i].y : std::nullopt);
  }
  const Dataset fit_data = strip_labels(subset(target, fit_rows));
  const bool require_complete = !cfg.ensemble.allow_uncovered_causes;
  out.phi = build_phi(*used, fit_data, require_complete);
  const bool any_label = std::any_of(labels.begin(), labels.end(), [](auto& y) { return y.has_value(); });
  out.posterior = fit_global(out.phi, any_label ? &labels : nullptr, cfg.ensemble);
  const Classification fitted = classify(out.phi, out.posterior);

  out.classification.C = C;
  out.classification.probs.assign(n0 * C, 0.0);
  out.classification.top.assign(n0, 0);
  for (const auto& r : target.records) out.classification.death_ids.push_back(r.death_id);
  for (std::size_t r = 0; r < fit_rows.size(); ++r) {
    const std::size_t i = fit_rows[r];
    std::copy_n(fitted.probs.begin() + static_cast<std::ptrdiff_t>(r * C), C,
                out.classification.probs.begin() + static_cast<std::ptrdiff_t>(i * C));
    out.classification.top[i] = fitted.top[r];
  }
  if (variant != Variant::Plain) {
    for (auto i : labeled) {
      const std::size_t y = *target.records[i].y;
      std::fill_n(out.classification.probs.begin() + static_cast<std::ptrdiff_t>(i * C), C, 0.0);
      out.classification.probs[i * C + y] = 1.0;
      out.classification.top[i] = y;
    }
  }

  out.csmf = out.posterior.pi_mean();
  out.heldout_counts.assign(C, 0);
  if (cfg.estimand == Estimand::FullTarget && variant != Variant::Plain) {
    // Labeled deaths whose causes pi does not account for: the local-model
    // part always, the partial-label part too when pi is not tied.
    for (auto i : local_part) ++out.heldout_counts[*target.records[i].y];
    if (!cfg.ensemble.tie_pi) {
      for (auto i : partial_part) ++out.heldout_counts[*target.records[i].y];
    }
    out.csmf = adjust_csmf(out.csmf, n0, out.heldout_counts);
  }
  return out;
}

}  // namespace bfl
