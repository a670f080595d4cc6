#include "bfl/report.hpp"

#include <cmath>
#include <sstream>

#include "bfl/error.hpp"
#include "bfl/format.hpp"

namespace bfl {

using nlohmann::json;

std::string pi_table_csv(const CauseList& causes, const VariantResult& r) {
  const auto mean = r.posterior.pi_mean();
  const auto lo = r.posterior.pi_quantile(0.025);
  const auto hi = r.posterior.pi_quantile(0.975);
  std::ostringstream out;
  out << "cause,csmf,pi_mean,pi_q025,pi_q975,rhat\n";
  for (std::size_t c = 0; c < causes.size(); ++c) {
    const double rhat = c < r.posterior.rhat.size() ? r.posterior.rhat[c] : 0.0;
    out << causes[c] << ',' << format_double(r.csmf[c]) << ',' << format_double(mean[c]) << ','
        << format_double(lo[c]) << ',' << format_double(hi[c]) << ','
        << (std::isfinite(rhat) ? format_double(rhat) : "NA") << '\n';
  }
  return out.str();
}

std::string lambda_csv(const CauseList& causes, const GlobalPosterior& post) {
  const auto lam = post.lambda_mean();
  std::ostringstream out;
  out << "cause";
  for (const auto& id : post.model_ids) out << ',' << id;
  out << '\n';
  for (std::size_t c = 0; c < post.C; ++c) {
    out << causes[c];
    for (std::size_t m = 0; m < post.M; ++m) out << ',' << format_double(lam[c * post.M + m]);
    out << '\n';
  }
  return out.str();
}

std::string deaths_csv(const CauseList& causes, const Classification& cls) {
  std::ostringstream out;
  out << "death_id";
  for (const auto& c : causes.ids()) out << ',' << c;
  out << ",top_cause\n";
  for (std::size_t i = 0; i < cls.size(); ++i) {
    out << cls.death_ids[i];
    for (std::size_t c = 0; c < cls.C; ++c) out << ',' << format_double(cls.prob(i, c));
    out << ',' << causes[cls.top[i]] << '\n';
  }
  return out.str();
}

json diagnostics_json(const GlobalPosterior& post) {
  json j;
  j["chains"] = post.chains;
  j["draws_per_chain"] = post.draws_per_chain;
  json rhat = json::array();
  for (double v : post.rhat) rhat.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["rhat"] = rhat;
  j["warnings"] = post.warnings;
  j["lambda_acceptance_rate"] =
      post.acceptance_rate ? json(*post.acceptance_rate) : json(nullptr);
  return j;
}

std::string serialize_posterior(const GlobalPosterior& post) {
  json j;
  j["C"] = post.C;
  j["M"] = post.M;
  j["chains"] = post.chains;
  j["draws_per_chain"] = post.draws_per_chain;
  j["model_ids"] = post.model_ids;
  j["pi_draws"] = post.pi_draws;
  j["lambda_draws"] = post.lambda_draws;
  j["variant"] = to_string(post.config.variant);
  return j.dump() + "\n";
}

GlobalPosterior parse_posterior(const std::string& text) {
  GlobalPosterior post;
  try {
    const json j = json::parse(text);
    post.C = j.at("C").get<std::size_t>();
    post.M = j.at("M").get<std::size_t>();
    post.chains = j.at("chains").get<std::size_t>();
    post.draws_per_chain = j.at("draws_per_chain").get<std::size_t>();
    post.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    post.pi_draws = j.at("pi_draws").get<std::vector<double>>();
    post.lambda_draws = j.at("lambda_draws").get<std::vector<double>>();
    post.config.variant = variant_from_string(j.at("variant").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedFile, std::string("posterior file: ") + e.what());
  }
  const std::size_t D = post.draws();
  if (post.model_ids.size() != post.M || post.pi_draws.size() != D * post.C ||
      post.lambda_draws.size() != D * post.C * post.M || D == 0) {
    fail(ErrorCode::MalformedFile, "posterior file dimensions are inconsistent");
  }
  return post;
}

std::string calibration_pi_csv(const CauseList& causes, const CalibrationPosterior& post) {
  const auto mean = post.pi_mean();
  const auto lo = post.pi_quantile(0.025);
  const auto hi = post.pi_quantile(0.975);
  std::ostringstream out;
  out << "cause,pi_mean,pi_q025,pi_q975\n";
  for (std::size_t c = 0; c < post.C; ++c) {
    out << causes[c] << ',' << format_double(mean[c]) << ',' << format_double(lo[c]) << ','
        << format_double(hi[c]) << '\n';
  }
  return out.str();
}

json calibration_report(const CauseList& causes, const CalibrationPosterior& post) {
  json j;
  j["method"] =
      "confusion-matrix calibration of hard top-cause predictions (simplified: each base "
      "model's prediction is reduced to its most likely cause before calibration, so "
      "confusion rows are Dirichlet given the shrinkage weight)";
  j["prior"] = {{"gamma_shape", post.config.alpha},
                {"gamma_rate", post.config.beta_rate},
                {"gamma_prior_mean", post.config.gamma_prior_mean()},
                {"epsilon", post.config.epsilon}};
  j["n_labeled"] = post.n_labeled;
  j["n_unlabeled"] = post.n_unlabeled;
  j["gamma_acceptance_rate"] = post.gamma_acceptance;
  const auto mean = post.pi_mean();
  const auto lo = post.pi_quantile(0.025);
  const auto hi = post.pi_quantile(0.975);
  json pi = json::array();
  for (std::size_t c = 0; c < post.C; ++c) {
    pi.push_back({{"cause", causes[c]}, {"mean", mean[c]}, {"q025", lo[c]}, {"q975", hi[c]}});
  }
  j["csmf"] = pi;
  json models = json::array();
  for (std::size_t m = 0; m < post.M; ++m) {
    json rows = json::array();
    json gamma = json::array();
    for (std::size_t c = 0; c < post.C; ++c) {
      json row = json::array();
      for (std::size_t k = 0; k < post.C; ++k) row.push_back(post.confusion(m, c, k));
      rows.push_back(row);
      gamma.push_back(post.gamma_mean[m * post.C + c]);
    }
    models.push_back({{"model", post.model_ids[m]}, {"confusion_mean", rows}, {"gamma_mean", gamma}});
  }
  j["models"] = models;
  return j;
}

}  // namespace bfl
