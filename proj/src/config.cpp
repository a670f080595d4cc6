#include "bfl/config.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "bfl/error.hpp"
#include "bfl/format.hpp"
#include "bfl/io.hpp"
#include "bfl/parallel.hpp"

namespace bfl {
namespace {

using nlohmann::json;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"paths", "base_model", "ensemble", "calibration", "scenario", "lodo", "generator",
            "seed", "seeds", "workers"}},
      {"paths", {"causes", "symptoms", "datasets", "target", "summaries", "summary_dir"}},
      {"base_model",
       {"K", "alpha_sb", "theta_prior", "pi_prior", "sparse", "spike_omega_prior",
        "presence_min_count", "iterations", "burn_in", "thin"}},
      {"ensemble",
       {"variant", "tie_pi", "lambda_prior", "pi_prior_conc", "chains", "iterations", "burn_in",
        "thin", "mix_split_fraction", "mh_step", "allow_uncovered_causes", "estimand"}},
      {"ensemble.lambda_prior", {"kind", "conc", "sigma"}},
      {"calibration",
       {"alpha", "beta_rate", "epsilon", "iterations", "burn_in", "chains", "log_gamma_step"}},
      {"scenario", {"kind", "label_fraction", "mild_labeled_share", "severe_beta_shape"}},
      {"lodo", {"methods", "gbql_low_rate", "gbql_high_rate", "record_runtime"}},
  };
  return keys;
}

void check_keys(const json& node, const std::string& prefix) {
  const auto it = known_keys().find(prefix);
  if (it == known_keys().end()) return;
  if (!node.is_object()) fail(ErrorCode::InvalidConfig, "'" + prefix + "' must be an object");
  for (const auto& [key, value] : node.items()) {
    if (!it->second.count(key)) {
      fail(ErrorCode::InvalidConfig,
           "unknown config key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
    }
    check_keys(value, prefix.empty() ? key : prefix + "." + key);
  }
}

BetaShape beta_shape(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::InvalidConfig, "Beta shapes are [a, b]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

RunConfig::RunConfig(json tree, std::filesystem::path base_dir)
    : tree_(std::move(tree)), base_dir_(std::move(base_dir)) {
  if (!tree_.is_object()) fail(ErrorCode::InvalidConfig, "config root must be an object");
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorCode::InvalidConfig, "override '" + assignment + "' is not key=value");
  }
  const auto keys = split(assignment.substr(0, eq), '.');
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &tree_;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->contains(keys[i]) || !(*node)[keys[i]].is_object()) (*node)[keys[i]] = json::object();
    node = &(*node)[keys[i]];
  }
  (*node)[keys.back()] = std::move(value);
}

const json* RunConfig::find(const std::string& dotted) const {
  const json* node = &tree_;
  for (const auto& k : split(dotted, '.')) {
    if (!node->is_object() || !node->contains(k)) return nullptr;
    node = &node->at(k);
  }
  return node;
}

template <typename T>
T RunConfig::get(const std::string& dotted, T fallback) const {
  const json* node = find(dotted);
  if (node == nullptr) return fallback;
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidConfig, "config key '" + dotted + "' has the wrong type");
  }
}

std::string RunConfig::path_value(const std::string& dotted) const {
  const auto v = get<std::string>(dotted, "");
  if (v.empty()) fail(ErrorCode::InvalidConfig, "config key '" + dotted + "' is required");
  return v;
}

void RunConfig::validate() const {
  check_keys(tree_, "");
  base_hyper().validate();
  base_gibbs().validate();
  ensemble().validate();
  estimand();
  calibration().validate();
  lodo().validate();
  workers();
  if (find("generator")) generator();
}

json RunConfig::echo() const {
  json out = tree_;
  out.erase("workers");
  return out;
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir_ / path;
}

std::uint64_t RunConfig::seed() const { return get<std::uint64_t>("seed", 1); }

std::vector<std::uint64_t> RunConfig::seeds() const {
  auto out = get<std::vector<std::uint64_t>>("seeds", {seed()});
  if (out.empty()) fail(ErrorCode::InvalidConfig, "seeds must not be empty");
  return out;
}

std::size_t RunConfig::workers() const {
  const auto w = get<std::size_t>("workers", default_workers());
  if (w == 0) fail(ErrorCode::InvalidConfig, "workers must be >= 1");
  return w;
}

LcmHyper RunConfig::base_hyper() const {
  LcmHyper h;
  h.K = get<std::size_t>("base_model.K", h.K);
  h.alpha_sb = get<double>("base_model.alpha_sb", h.alpha_sb);
  if (const json* t = find("base_model.theta_prior")) h.theta_prior = beta_shape(*t);
  h.pi_prior = get<double>("base_model.pi_prior", h.pi_prior);
  h.sparse = get<bool>("base_model.sparse", h.sparse);
  if (const json* t = find("base_model.spike_omega_prior")) h.spike_omega_prior = beta_shape(*t);
  h.presence_min_count = get<std::size_t>("base_model.presence_min_count", h.presence_min_count);
  return h;
}

GibbsConfig RunConfig::base_gibbs() const {
  GibbsConfig g;
  g.iterations = get<std::size_t>("base_model.iterations", g.iterations);
  g.burn_in = get<std::size_t>("base_model.burn_in", g.burn_in);
  g.thin = get<std::size_t>("base_model.thin", g.thin);
  g.seed = seed();
  return g;
}

EnsembleConfig RunConfig::ensemble() const {
  EnsembleConfig e;
  e.variant = variant_from_string(get<std::string>("ensemble.variant", to_string(e.variant)));
  e.tie_pi = get<bool>("ensemble.tie_pi", e.tie_pi);
  const auto kind = get<std::string>("ensemble.lambda_prior.kind", "dirichlet");
  if (kind == "dirichlet") {
    e.lambda_prior.kind = LambdaPriorKind::Dirichlet;
  } else if (kind == "logistic_normal") {
    e.lambda_prior.kind = LambdaPriorKind::LogisticNormal;
  } else {
    fail(ErrorCode::InvalidConfig, "unknown lambda prior '" + kind + "'");
  }
  e.lambda_prior.conc = get<double>("ensemble.lambda_prior.conc", e.lambda_prior.conc);
  e.lambda_prior.sigma = get<double>("ensemble.lambda_prior.sigma", e.lambda_prior.sigma);
  e.pi_prior_conc = get<double>("ensemble.pi_prior_conc", e.pi_prior_conc);
  e.chains = get<std::size_t>("ensemble.chains", e.chains);
  e.iterations = get<std::size_t>("ensemble.iterations", e.iterations);
  e.burn_in = get<std::size_t>("ensemble.burn_in", e.burn_in);
  e.thin = get<std::size_t>("ensemble.thin", e.thin);
  e.mix_split_fraction = get<double>("ensemble.mix_split_fraction", e.mix_split_fraction);
  e.mh_step = get<double>("ensemble.mh_step", e.mh_step);
  e.allow_uncovered_causes =
      get<bool>("ensemble.allow_uncovered_causes", e.allow_uncovered_causes);
  e.seed = seed();
  e.workers = workers();
  return e;
}

Estimand RunConfig::estimand() const {
  return estimand_from_string(get<std::string>("ensemble.estimand", "full_target"));
}

CalibConfig RunConfig::calibration() const {
  CalibConfig c;
  c.alpha = get<double>("calibration.alpha", c.alpha);
  c.beta_rate = get<double>("calibration.beta_rate", c.beta_rate);
  c.epsilon = get<double>("calibration.epsilon", c.epsilon);
  c.iterations = get<std::size_t>("calibration.iterations", c.iterations);
  c.burn_in = get<std::size_t>("calibration.burn_in", c.burn_in);
  c.chains = get<std::size_t>("calibration.chains", c.chains);
  c.log_gamma_step = get<double>("calibration.log_gamma_step", c.log_gamma_step);
  c.seed = seed();
  c.workers = workers();
  return c;
}

LodoConfig RunConfig::lodo() const {
  LodoConfig l;
  l.base_hyper = base_hyper();
  l.base_gibbs = base_gibbs();
  l.ensemble = ensemble();
  l.calibration = calibration();
  l.gbql_low_rate = get<double>("lodo.gbql_low_rate", l.gbql_low_rate);
  l.gbql_high_rate = get<double>("lodo.gbql_high_rate", l.gbql_high_rate);
  l.record_runtime = get<bool>("lodo.record_runtime", l.record_runtime);
  if (find("lodo.methods")) {
    l.methods.clear();
    for (const auto& m : get<std::vector<std::string>>("lodo.methods", {})) {
      l.methods.push_back(method_from_string(m));
    }
  }
  l.scenario = scenario_from_string(get<std::string>("scenario.kind", "random_sample"));
  l.scenario_params.label_fraction =
      get<double>("scenario.label_fraction", l.scenario_params.label_fraction);
  l.scenario_params.mild_labeled_share =
      get<double>("scenario.mild_labeled_share", l.scenario_params.mild_labeled_share);
  l.scenario_params.severe_beta_shape =
      get<double>("scenario.severe_beta_shape", l.scenario_params.severe_beta_shape);
  l.seeds = seeds();
  l.workers = workers();
  return l;
}

GeneratorSpec RunConfig::generator() const {
  const json* g = find("generator");
  if (g == nullptr) fail(ErrorCode::InvalidGenerator, "config has no generator block");
  json copy = *g;
  if (!copy.contains("seed") && copy.is_object()) copy["seed"] = seed();
  return generator_from_json(copy);
}

CauseList RunConfig::causes() const { return load_cause_list(resolve(path_value("paths.causes"))); }

SymptomDictionary RunConfig::dict() const {
  return load_symptom_dictionary(resolve(path_value("paths.symptoms")));
}

std::vector<Dataset> RunConfig::datasets() const {
  const auto paths = get<std::vector<std::string>>("paths.datasets", {});
  if (paths.empty()) fail(ErrorCode::InvalidConfig, "paths.datasets is required");
  const CauseList c = causes();
  const SymptomDictionary d = dict();
  std::vector<Dataset> out;
  for (const auto& p : paths) out.push_back(load_dataset(resolve(p), c, d));
  return out;
}

Dataset RunConfig::target() const {
  return load_dataset(resolve(path_value("paths.target")), causes(), dict());
}

std::vector<std::filesystem::path> RunConfig::summary_paths() const {
  std::vector<std::filesystem::path> out;
  for (const auto& p : get<std::vector<std::string>>("paths.summaries", {})) out.push_back(resolve(p));
  const auto dir = get<std::string>("paths.summary_dir", "");
  if (!dir.empty()) {
    std::vector<std::filesystem::path> found;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(resolve(dir), ec)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 13 && name.ends_with(".summary.json")) found.push_back(e.path());
    }
    if (ec) fail(ErrorCode::IoError, "cannot list summary_dir '" + dir + "'");
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  if (out.empty()) fail(ErrorCode::InvalidConfig, "no summaries configured");
  return out;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return RunConfig(json::object(), std::filesystem::current_path());
  json tree;
  try {
    tree = json::parse(read_file(*path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, "config is not valid JSON: " + std::string(e.what()));
  }
  auto dir = std::filesystem::absolute(*path).parent_path();
  return RunConfig(std::move(tree), dir);
}

}  // namespace bfl
