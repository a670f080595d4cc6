#include "bfl/lcm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bfl/error.hpp"
#include "bfl/numeric.hpp"
#include "bfl/random.hpp"
#include "bfl/version.hpp"

namespace bfl {
namespace {

constexpr double kThetaFloor = 1e-10;

double log_gamma_fn(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_beta_fn(double a, double b) {
  return log_gamma_fn(a) + log_gamma_fn(b) - log_gamma_fn(a + b);
}

double clamp_theta(double t) { return std::clamp(t, kThetaFloor, 1.0 - kThetaFloor); }

struct TrainingRecord {
  std::size_t cause;
  std::vector<SymptomValue> x;
};

// Truncated stick-breaking draw of one nu row given class occupancy.
void sample_stick_breaking(Rng& rng, std::span<const std::size_t> occupancy,
                           double alpha, std::span<double> nu) {
  const std::size_t K = nu.size();
  std::size_t tail = std::accumulate(occupancy.begin(), occupancy.end(), std::size_t{0});
  double remaining = 1.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    tail -= occupancy[k];
    const double v = rng.beta(1.0 + static_cast<double>(occupancy[k]),
                              alpha + static_cast<double>(tail));
    nu[k] = remaining * v;
    remaining *= (1.0 - v);
  }
  nu[K - 1] = remaining;
}

}  // namespace

void LcmHyper::validate() const {
  if (K < 1) fail(ErrorCode::InvalidHyper, "K must be >= 1");
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(alpha_sb)) fail(ErrorCode::InvalidHyper, "alpha_sb must be > 0");
  if (!positive(theta_prior.a) || !positive(theta_prior.b)) {
    fail(ErrorCode::InvalidHyper, "theta_prior shapes must be > 0");
  }
  if (!positive(pi_prior)) fail(ErrorCode::InvalidHyper, "pi_prior must be > 0");
  if (!positive(spike_omega_prior.a) || !positive(spike_omega_prior.b)) {
    fail(ErrorCode::InvalidHyper, "spike_omega_prior shapes must be > 0");
  }
  if (presence_min_count < 1) {
    fail(ErrorCode::InvalidHyper, "presence_min_count must be >= 1");
  }
}

void GibbsConfig::validate() const {
  if (iterations == 0 || burn_in >= iterations) {
    fail(ErrorCode::InvalidHyper, "burn_in must be smaller than iterations");
  }
  if (thin < 1) fail(ErrorCode::InvalidHyper, "thin must be >= 1");
}

void BaseModelSummary::validate(double simplex_tol) const {
  const auto bad = [](const std::string& what) { fail(ErrorCode::InvalidSummary, what); };
  if (C < 1 || K < 1 || p < 1) bad("dimensions must be positive");
  if (present.size() != C || n_by_cause.size() != C) bad("present/n_by_cause length != C");
  if (nu_bar.size() != C * K) bad("nu_bar size != C*K");
  if (theta_bar.size() != C * K * p) bad("theta_bar size != C*K*p");
  bool any = false;
  for (std::size_t c = 0; c < C; ++c) {
    const bool expect = n_by_cause[c] >= std::max<std::size_t>(hyper.presence_min_count, 1);
    if ((present[c] != 0) != expect) {
      bad("present flag of cause " + std::to_string(c) + " disagrees with n_by_cause");
    }
    if (!present[c]) continue;
    any = true;
    if (!is_simplex(std::span(nu_bar).subspan(c * K, K), simplex_tol)) {
      bad("nu_bar row " + std::to_string(c) + " is not a simplex");
    }
    for (std::size_t i = c * K * p; i < (c + 1) * K * p; ++i) {
      const double t = theta_bar[i];
      if (!(t > 0.0 && t < 1.0)) bad("theta_bar entry outside (0,1) for cause " +
                                     std::to_string(c));
    }
  }
  if (!any) bad("no cause is present");
}

BaseModelSummary train_lcm(const Dataset& labeled, const LcmHyper& hyper,
                           const GibbsConfig& cfg) {
  hyper.validate();
  cfg.validate();

  std::vector<TrainingRecord> data;
  std::vector<const Record*> sorted;
  for (const auto& r : labeled.records) {
    if (r.y) sorted.push_back(&r);
  }
  if (sorted.empty()) {
    fail(ErrorCode::EmptyDataset, "domain '" + labeled.domain_id + "' has no labeled deaths");
  }
  // Canonical order makes the output independent of input record order.
  std::sort(sorted.begin(), sorted.end(),
            [](const Record* a, const Record* b) { return a->death_id < b->death_id; });

  const std::size_t C = labeled.num_causes();
  const std::size_t K = hyper.K;
  const std::size_t p = labeled.num_symptoms();
  const std::size_t N = sorted.size();
  data.reserve(N);
  for (const Record* r : sorted) {
    if (r->x.size() != p) fail(ErrorCode::DimensionMismatch, "record " + r->death_id);
    data.push_back({*r->y, r->x});
  }

  BaseModelSummary out;
  out.domain_id = labeled.domain_id;
  out.C = C;
  out.K = K;
  out.p = p;
  out.cause_list_fingerprint = labeled.causes.fingerprint();
  out.dict_fingerprint = labeled.dict.fingerprint();
  out.hyper = hyper;
  out.provenance = {kToolVersion, cfg.seed, cfg.iterations, cfg.burn_in};
  out.n_by_cause.assign(C, 0);
  for (const auto& r : data) ++out.n_by_cause[r.cause];
  out.present.assign(C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    out.present[c] = out.n_by_cause[c] >= hyper.presence_min_count ? 1 : 0;
  }
  if (std::none_of(out.present.begin(), out.present.end(), [](auto v) { return v != 0; })) {
    fail(ErrorCode::EmptyDataset, "no cause reaches the presence threshold");
  }

  Rng rng(mix_seed(cfg.seed, 0x1c3a));
  LcmState st;
  st.pi_m.assign(C, 1.0 / static_cast<double>(C));
  st.nu.assign(C * K, 1.0 / static_cast<double>(K));
  st.theta.assign(C * K * p, 0.5);
  st.z.resize(N);
  for (auto& z : st.z) z = rng.uniform_index(K);
  if (hyper.sparse) {
    st.delta.assign(C * K * p, 1);
    st.slab.assign(C * K * p, 0.5);
    st.mu.assign(C * p, 0.5);
    st.omega.assign(C, 0.5);
  }

  const double a0 = hyper.theta_prior.a;
  const double b0 = hyper.theta_prior.b;
  const double log_beta_prior = log_beta_fn(a0, b0);

  std::vector<std::size_t> occupancy(C * K);
  std::vector<std::size_t> yes(C * K * p), obs(C * K * p);
  std::vector<double> log_nu(C * K), log_t(C * K * p), log_1mt(C * K * p);
  std::vector<double> nu_sum(C * K, 0.0), theta_sum(C * K * p, 0.0);
  std::vector<double> weights(K);
  std::size_t kept = 0;

  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    // sufficient statistics of the current assignment
    std::fill(occupancy.begin(), occupancy.end(), 0);
    std::fill(yes.begin(), yes.end(), 0);
    std::fill(obs.begin(), obs.end(), 0);
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t ck = data[i].cause * K + st.z[i];
      ++occupancy[ck];
      const auto& x = data[i].x;
      for (std::size_t j = 0; j < p; ++j) {
        if (x[j] == SymptomValue::Missing) continue;
        ++obs[ck * p + j];
        if (x[j] == SymptomValue::Yes) ++yes[ck * p + j];
      }
    }

    for (std::size_t c = 0; c < C; ++c) {
      if (!out.present[c]) continue;
      sample_stick_breaking(rng, std::span(occupancy).subspan(c * K, K), hyper.alpha_sb,
                            std::span(st.nu).subspan(c * K, K));

      if (!hyper.sparse) {
        for (std::size_t i = c * K * p; i < (c + 1) * K * p; ++i) {
          const double s = static_cast<double>(yes[i]);
          const double f = static_cast<double>(obs[i] - yes[i]);
          st.theta[i] = clamp_theta(rng.beta(a0 + s, b0 + f));
        }
        continue;
      }

      // spike-and-slab: delta | mu, omega (slab integrated out), slab | delta,
      // then mu and omega given the inclusion pattern
      const double omega = st.omega[c];
      std::size_t included = 0;
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < p; ++j) {
          const std::size_t i = (c * K + k) * p + j;
          const double s = static_cast<double>(yes[i]);
          const double f = static_cast<double>(obs[i] - yes[i]);
          const double mu = st.mu[c * p + j];
          const double log_slab = log_beta_fn(a0 + s, b0 + f) - log_beta_prior + std::log(omega);
          const double log_spike =
              s * std::log(mu) + f * std::log1p(-mu) + std::log1p(-omega);
          const double p_slab = 1.0 / (1.0 + std::exp(log_spike - log_slab));
          st.delta[i] = rng.bernoulli(p_slab) ? 1 : 0;
          st.slab[i] = st.delta[i] ? clamp_theta(rng.beta(a0 + s, b0 + f))
                                   : clamp_theta(rng.beta(a0, b0));
          included += st.delta[i];
        }
      }
      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0, f = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t i = (c * K + k) * p + j;
          if (st.delta[i]) continue;
          s += static_cast<double>(yes[i]);
          f += static_cast<double>(obs[i] - yes[i]);
        }
        st.mu[c * p + j] = clamp_theta(rng.beta(a0 + s, b0 + f));
      }
      const double total = static_cast<double>(K * p);
      st.omega[c] = clamp_theta(rng.beta(hyper.spike_omega_prior.a + static_cast<double>(included),
                                         hyper.spike_omega_prior.b + total -
                                             static_cast<double>(included)));
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < p; ++j) {
          const std::size_t i = (c * K + k) * p + j;
          st.theta[i] = st.delta[i] ? st.slab[i] : st.mu[c * p + j];
        }
      }
    }

    // training-domain CSMF; sampled for completeness, never exported
    {
      std::vector<double> conc(C);
      for (std::size_t c = 0; c < C; ++c) {
        conc[c] = hyper.pi_prior + static_cast<double>(out.n_by_cause[c]);
      }
      st.pi_m = rng.dirichlet(conc);
    }

    for (std::size_t i = 0; i < C * K; ++i) log_nu[i] = std::log(st.nu[i]);
    for (std::size_t i = 0; i < C * K * p; ++i) {
      log_t[i] = std::log(st.theta[i]);
      log_1mt[i] = std::log1p(-st.theta[i]);
    }
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t c = data[n].cause;
      const auto& x = data[n].x;
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t base = (c * K + k) * p;
        double w = log_nu[c * K + k];
        for (std::size_t j = 0; j < p; ++j) {
          if (x[j] == SymptomValue::Yes) {
            w += log_t[base + j];
          } else if (x[j] == SymptomValue::No) {
            w += log_1mt[base + j];
          }
        }
        weights[k] = w;
      }
      st.z[n] = K == 1 ? 0 : rng.categorical_log(weights);
    }

    if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      ++kept;
      for (std::size_t i = 0; i < C * K; ++i) nu_sum[i] += st.nu[i];
      for (std::size_t i = 0; i < C * K * p; ++i) theta_sum[i] += st.theta[i];
    }
  }

  out.nu_bar.assign(C * K, 0.0);
  out.theta_bar.assign(C * K * p, 0.0);
  const double inv = 1.0 / static_cast<double>(kept);
  for (std::size_t c = 0; c < C; ++c) {
    if (!out.present[c]) continue;
    double row = 0.0;
    for (std::size_t k = 0; k < K; ++k) row += nu_sum[c * K + k];
    for (std::size_t k = 0; k < K; ++k) out.nu_bar[c * K + k] = nu_sum[c * K + k] / row;
    for (std::size_t i = c * K * p; i < (c + 1) * K * p; ++i) {
      out.theta_bar[i] = clamp_theta(theta_sum[i] * inv);
    }
  }
  return out;
}

CondLikelihood::CondLikelihood(const BaseModelSummary& s)
    : C_(s.C), K_(s.K), p_(s.p), present_(s.present) {
  log_nu_.resize(C_ * K_);
  log_theta_.resize(C_ * K_ * p_);
  log_one_minus_theta_.resize(C_ * K_ * p_);
  for (std::size_t i = 0; i < C_ * K_; ++i) log_nu_[i] = std::log(s.nu_bar[i]);
  for (std::size_t i = 0; i < C_ * K_ * p_; ++i) {
    log_theta_[i] = std::log(s.theta_bar[i]);
    log_one_minus_theta_[i] = std::log1p(-s.theta_bar[i]);
  }
}

double CondLikelihood::operator()(std::span<const SymptomValue> x, std::size_t c) const {
  if (c >= C_) fail(ErrorCode::DimensionMismatch, "cause index out of range");
  if (x.size() != p_) {
    fail(ErrorCode::DimensionMismatch, "symptom vector has length " +
                                           std::to_string(x.size()) + ", expected " +
                                           std::to_string(p_));
  }
  if (!present_[c]) fail(ErrorCode::AbsentCause, "cause " + std::to_string(c));
  if (std::all_of(x.begin(), x.end(), [](auto v) { return v == SymptomValue::Missing; })) {
    return 0.0;
  }
  double terms[64];
  std::vector<double> heap;
  double* w = terms;
  if (K_ > 64) {
    heap.resize(K_);
    w = heap.data();
  }
  for (std::size_t k = 0; k < K_; ++k) {
    const std::size_t base = (c * K_ + k) * p_;
    double acc = log_nu_[c * K_ + k];
    for (std::size_t j = 0; j < p_; ++j) {
      if (x[j] == SymptomValue::Yes) {
        acc += log_theta_[base + j];
      } else if (x[j] == SymptomValue::No) {
        acc += log_one_minus_theta_[base + j];
      }
    }
    w[k] = acc;
  }
  return std::min(0.0, log_sum_exp(std::span<const double>(w, K_)));
}

double cond_loglik(const BaseModelSummary& s, std::span<const SymptomValue> x,
                   std::size_t c) {
  return CondLikelihood(s)(x, c);
}

double enumerate_mass(const BaseModelSummary& s, std::size_t c) {
  if (s.p > 20) fail(ErrorCode::TooManySymptoms, "enumerate_mass needs p <= 20");
  const CondLikelihood lik(s);
  std::vector<SymptomValue> x(s.p, SymptomValue::No);
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << s.p;
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    for (std::size_t j = 0; j < s.p; ++j) {
      x[j] = ((bits >> j) & 1U) ? SymptomValue::Yes : SymptomValue::No;
    }
    total += std::exp(lik(x, c));
  }
  return total;
}

}  // namespace bfl
