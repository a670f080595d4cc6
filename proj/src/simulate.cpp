#include "bfl/simulate.hpp"

#include <cmath>

#include "bfl/error.hpp"
#include "bfl/metrics.hpp"
#include "bfl/numeric.hpp"
#include "bfl/random.hpp"

namespace bfl {
namespace {

void check_simplex_rows(const std::vector<double>& v, std::size_t rows, std::size_t cols,
                        const std::string& what) {
  if (v.size() != rows * cols) {
    fail(ErrorCode::InvalidGenerator, what + " must have " + std::to_string(rows * cols) + " entries");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (!is_simplex(std::span<const double>(v).subspan(r * cols, cols), 1e-8)) {
      fail(ErrorCode::InvalidGenerator, what + " row " + std::to_string(r) + " is not a simplex");
    }
  }
}

std::vector<double> get_vector(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  std::vector<double> out;
  const auto flatten = [&](const auto& self, const nlohmann::json& node) -> void {
    if (node.is_array()) {
      for (const auto& e : node) self(self, e);
    } else if (node.is_number()) {
      out.push_back(node.get<double>());
    } else {
      fail(ErrorCode::InvalidGenerator, std::string(key) + " must hold numbers");
    }
  };
  flatten(flatten, j.at(key));
  return out;
}

std::vector<double> dataset_csmf(const Dataset& d) {
  std::vector<std::size_t> y;
  for (const auto& r : d.records) y.push_back(*r.y);
  return empirical_csmf(y, d.num_causes());
}

std::string pad_id(const std::string& prefix, std::size_t i, std::size_t total) {
  std::string num = std::to_string(i);
  const std::string width = std::to_string(total);
  if (num.size() < width.size()) num.insert(0, width.size() - num.size(), '0');
  return prefix + num;
}

}  // namespace

void GeneratorSpec::validate() const {
  if (C < 2) fail(ErrorCode::InvalidGenerator, "C must be >= 2");
  if (K < 1) fail(ErrorCode::InvalidGenerator, "K must be >= 1");
  if (p < 1) fail(ErrorCode::InvalidGenerator, "p must be >= 1");
  if (!causes.empty() && causes.size() != C) fail(ErrorCode::InvalidGenerator, "causes length != C");
  if (!symptoms.empty() && symptoms.size() != p) {
    fail(ErrorCode::InvalidGenerator, "symptoms length != p");
  }
  if (domains.empty()) fail(ErrorCode::InvalidGenerator, "at least one domain is required");
  if (!(theta_a > 0.0) || !(theta_b > 0.0) || !(nu_conc > 0.0)) {
    fail(ErrorCode::InvalidGenerator, "theta_a, theta_b and nu_conc must be > 0");
  }
  if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
    fail(ErrorCode::InvalidGenerator, "heterogeneity must lie in [0,1]");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    fail(ErrorCode::InvalidGenerator, "missing_rate must lie in [0,1)");
  }
  for (std::size_t m = 0; m < domains.size(); ++m) {
    const auto& d = domains[m];
    const std::string tag = "domain '" + d.id + "' ";
    if (d.id.empty()) fail(ErrorCode::InvalidGenerator, "domain id must not be empty");
    for (std::size_t e = 0; e < m; ++e) {
      if (domains[e].id == d.id) fail(ErrorCode::InvalidGenerator, tag + "appears twice");
    }
    if (d.n == 0) fail(ErrorCode::InvalidGenerator, tag + "needs n >= 1");
    if (!d.pi.empty()) check_simplex_rows(d.pi, 1, C, tag + "pi");
    if (!d.nu.empty()) check_simplex_rows(d.nu, C, K, tag + "nu");
    if (!d.theta.empty()) {
      if (d.theta.size() != C * K * p) {
        fail(ErrorCode::InvalidGenerator, tag + "theta must have C*K*p entries");
      }
      for (double v : d.theta) {
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidGenerator, tag + "theta outside [0,1]");
      }
    }
  }
  if (target) {
    if (target->n == 0) fail(ErrorCode::InvalidGenerator, "target needs n >= 1");
    if (target->id.empty()) fail(ErrorCode::InvalidGenerator, "target id must not be empty");
    for (const auto& d : domains) {
      if (d.id == target->id) fail(ErrorCode::InvalidGenerator, "target id clashes with a domain");
    }
    check_simplex_rows(target->pi, 1, C, "target pi");
    check_simplex_rows(target->lambda, C, domains.size(), "target lambda");
  }
}

GeneratorSpec generator_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidGenerator, "generator must be an object");
  GeneratorSpec g;
  try {
    g.C = j.at("C").get<std::size_t>();
    g.K = j.at("K").get<std::size_t>();
    g.p = j.at("p").get<std::size_t>();
    g.causes = j.value("causes", std::vector<std::string>{});
    g.symptoms = j.value("symptoms", std::vector<std::string>{});
    g.theta_a = j.value("theta_a", g.theta_a);
    g.theta_b = j.value("theta_b", g.theta_b);
    g.heterogeneity = j.value("heterogeneity", g.heterogeneity);
    g.nu_conc = j.value("nu_conc", g.nu_conc);
    g.missing_rate = j.value("missing_rate", g.missing_rate);
    g.seed = j.value("seed", g.seed);
    for (const auto& d : j.at("domains")) {
      DomainSpec s;
      s.id = d.at("id").get<std::string>();
      s.n = d.at("n").get<std::size_t>();
      s.pi = get_vector(d, "pi");
      s.nu = get_vector(d, "nu");
      s.theta = get_vector(d, "theta");
      g.domains.push_back(std::move(s));
    }
    if (j.contains("target") && !j.at("target").is_null()) {
      const auto& t = j.at("target");
      TargetSpec s;
      s.id = t.value("id", s.id);
      s.n = t.at("n").get<std::size_t>();
      s.pi = get_vector(t, "pi");
      s.lambda = get_vector(t, "lambda");
      s.labeled = t.value("labeled", s.labeled);
      g.target = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidGenerator, e.what());
  }
  g.validate();
  return g;
}

nlohmann::json to_json(const GeneratorSpec& g) {
  nlohmann::json j;
  j["C"] = g.C;
  j["K"] = g.K;
  j["p"] = g.p;
  if (!g.causes.empty()) j["causes"] = g.causes;
  if (!g.symptoms.empty()) j["symptoms"] = g.symptoms;
  j["theta_a"] = g.theta_a;
  j["theta_b"] = g.theta_b;
  j["heterogeneity"] = g.heterogeneity;
  j["nu_conc"] = g.nu_conc;
  j["missing_rate"] = g.missing_rate;
  j["seed"] = g.seed;
  j["domains"] = nlohmann::json::array();
  for (const auto& d : g.domains) {
    nlohmann::json e{{"id", d.id}, {"n", d.n}};
    if (!d.pi.empty()) e["pi"] = d.pi;
    if (!d.nu.empty()) e["nu"] = d.nu;
    if (!d.theta.empty()) e["theta"] = d.theta;
    j["domains"].push_back(e);
  }
  if (g.target) {
    j["target"] = {{"id", g.target->id},
                   {"n", g.target->n},
                   {"pi", g.target->pi},
                   {"lambda", g.target->lambda},
                   {"labeled", g.target->labeled}};
  }
  return j;
}

SimulationOutput simulate(const GeneratorSpec& g) {
  g.validate();
  const std::size_t C = g.C, K = g.K, p = g.p, M = g.domains.size();
  SimulationOutput out;
  {
    std::vector<std::string> causes = g.causes, symptoms = g.symptoms;
    for (std::size_t c = 0; causes.size() < C; ++c) causes.push_back("cause_" + std::to_string(c + 1));
    for (std::size_t j = 0; symptoms.size() < p; ++j) symptoms.push_back("s_" + std::to_string(j + 1));
    out.causes = CauseList(std::move(causes));
    out.dict = SymptomDictionary(std::move(symptoms));
  }

  Rng param_rng(mix_seed(g.seed, 1));
  std::vector<double> base(C * K * p);
  for (double& v : base) v = param_rng.beta(g.theta_a, g.theta_b);
  const std::vector<double> conc(K, g.nu_conc);
  for (const auto& d : g.domains) {
    std::vector<double> nu = d.nu, theta = d.theta;
    if (nu.empty()) {
      for (std::size_t c = 0; c < C; ++c) {
        const auto row = param_rng.dirichlet(conc);
        nu.insert(nu.end(), row.begin(), row.end());
      }
    }
    if (theta.empty()) {
      theta = base;
      for (double& v : theta) {
        if (param_rng.uniform() < g.heterogeneity) v = param_rng.beta(g.theta_a, g.theta_b);
      }
    }
    out.nu.push_back(std::move(nu));
    out.theta.push_back(std::move(theta));
  }

  const auto draw_x = [&](Rng& rng, std::size_t m, std::size_t c) {
    const std::size_t k = rng.categorical(std::span<const double>(out.nu[m]).subspan(c * K, K));
    std::vector<SymptomValue> x(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double t = out.theta[m][(c * K + k) * p + j];
      x[j] = rng.uniform() < t ? SymptomValue::Yes : SymptomValue::No;
      if (g.missing_rate > 0.0 && rng.uniform() < g.missing_rate) x[j] = SymptomValue::Missing;
    }
    return x;
  };
  const auto blank = [&](const std::string& id) {
    Dataset d;
    d.domain_id = id;
    d.causes = out.causes;
    d.dict = out.dict;
    return d;
  };

  for (std::size_t m = 0; m < M; ++m) {
    const auto& spec = g.domains[m];
    Rng rng(mix_seed(g.seed, 100 + m));
    const std::vector<double> pi =
        spec.pi.empty() ? std::vector<double>(C, 1.0 / static_cast<double>(C)) : spec.pi;
    Dataset d = blank(spec.id);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t c = rng.categorical(pi);
      d.records.push_back({pad_id(spec.id + "_", i, spec.n), draw_x(rng, m, c), c});
    }
    out.domains.push_back(std::move(d));
  }

  if (g.target) {
    const auto& t = *g.target;
    Rng rng(mix_seed(g.seed, 99));
    Dataset d = blank(t.id);
    for (std::size_t i = 0; i < t.n; ++i) {
      const std::size_t c = rng.categorical(t.pi);
      const std::size_t h = rng.categorical(std::span<const double>(t.lambda).subspan(c * M, M));
      out.target_source.push_back(h);
      out.target_labels.push_back(c);
      d.records.push_back({pad_id(t.id + "_", i, t.n), draw_x(rng, h, c), c});
    }
    if (!t.labeled) d = strip_labels(d);
    out.target = std::move(d);
  }
  return out;
}

nlohmann::json SimulationOutput::ledger() const {
  nlohmann::json j;
  j["causes"] = causes.ids();
  j["symptoms"] = dict.ids();
  j["domains"] = nlohmann::json::array();
  for (std::size_t m = 0; m < domains.size(); ++m) {
    j["domains"].push_back({{"id", domains[m].domain_id},
                            {"n", domains[m].size()},
                            {"realized_csmf", dataset_csmf(domains[m])},
                            {"nu", nu[m]},
                            {"theta", theta[m]}});
  }
  if (target) {
    std::vector<std::size_t> per(domains.size(), 0);
    for (auto h : target_source) ++per[h];
    j["target"] = {{"id", target->domain_id},
                   {"n", target->size()},
                   {"realized_csmf", empirical_csmf(target_labels, causes.size())},
                   {"source_counts", per}};
  } else {
    j["target"] = nullptr;
  }
  return j;
}

}  // namespace bfl
