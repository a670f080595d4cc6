#include "bfl/lodo.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <sstream>

#include "bfl/error.hpp"
#include "bfl/format.hpp"
#include "bfl/metrics.hpp"
#include "bfl/numeric.hpp"
#include "bfl/parallel.hpp"
#include "bfl/random.hpp"

namespace bfl {
namespace {

constexpr const char* kCsvHeader =
    "target_domain,method,seed,scenario,csmf_acc,top_acc,balanced_acc,runtime_s";

struct UnitResult {
  std::vector<ExperimentRow> rows;
  std::vector<FoldIssue> issues;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::size_t> labeled_counts(const Dataset& d) {
  std::vector<std::size_t> out(d.num_causes(), 0);
  for (const auto& r : d.records) {
    if (r.y) ++out[*r.y];
  }
  return out;
}

std::string join_causes(const CauseList& causes, const std::vector<std::size_t>& idx) {
  std::string out;
  for (auto c : idx) out += (out.empty() ? "" : ", ") + causes[c];
  return out;
}

nlohmann::json quartiles(std::vector<double> v) {
  if (v.empty()) return nullptr;
  return {{"median", median(v)}, {"q25", quantile(v, 0.25)}, {"q75", quantile(v, 0.75)},
          {"n", v.size()}};
}

nlohmann::json method_summary(const std::vector<const ExperimentRow*>& rows) {
  std::vector<double> csmf, top, bal;
  for (const auto* r : rows) {
    csmf.push_back(r->metrics.csmf_acc);
    if (r->metrics.top_acc) top.push_back(*r->metrics.top_acc);
    if (r->metrics.balanced_acc) bal.push_back(*r->metrics.balanced_acc);
  }
  return {{"csmf_acc", quartiles(csmf)}, {"top_acc", quartiles(top)},
          {"balanced_acc", quartiles(bal)}};
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::BflPlain: return "bfl_plain";
    case Method::BflPartial: return "bfl_partial";
    case Method::BflDomain: return "bfl_domain";
    case Method::BflMix: return "bfl_mix";
    case Method::LocalSelf: return "local_self";
    case Method::LocalAvg: return "local_avg";
    case Method::GbqlLow: return "gbql_0.5";
    case Method::GbqlHigh: return "gbql_50";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (auto m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorCode::InvalidConfig, "unknown method '" + s + "'");
}

std::vector<Method> all_methods() {
  return {Method::BflPlain,  Method::BflPartial, Method::BflDomain, Method::BflMix,
          Method::LocalSelf, Method::LocalAvg,   Method::GbqlLow,   Method::GbqlHigh};
}

void LodoConfig::validate() const {
  base_hyper.validate();
  base_gibbs.validate();
  ensemble.validate();
  calibration.validate();
  if (!(gbql_low_rate > 0.0) || !(gbql_high_rate > 0.0)) {
    fail(ErrorCode::InvalidConfig, "calibration rates must be > 0");
  }
  if (seeds.empty()) fail(ErrorCode::InvalidConfig, "seeds must not be empty");
  if (methods.empty()) fail(ErrorCode::InvalidConfig, "methods must not be empty");
  if (!(scenario_params.label_fraction > 0.0 && scenario_params.label_fraction < 1.0)) {
    fail(ErrorCode::InvalidConfig, "label_fraction must lie in (0,1)");
  }
}

Estimand estimand_for(ScenarioKind kind) {
  return kind == ScenarioKind::RandomSample ? Estimand::FullTarget : Estimand::UnlabeledSubset;
}

MetricSet score(const std::vector<double>& csmf, const std::vector<std::size_t>* top,
                const GroundTruth& truth, Estimand estimand) {
  MetricSet out;
  const auto& ref = estimand == Estimand::FullTarget ? truth.full_csmf : truth.unlabeled_csmf;
  out.csmf_acc = csmf_accuracy(csmf, ref);
  if (top == nullptr) return out;
  std::vector<std::size_t> pred, actual;
  for (auto i : truth.unlabeled_positions()) {
    pred.push_back(top->at(i));
    actual.push_back(truth.labels[i]);
  }
  if (actual.empty()) return out;
  out.top_acc = top_cause_accuracy(pred, actual);
  out.balanced_acc = balanced_accuracy(pred, actual, csmf.size());
  return out;
}

ExperimentReport run_lodo(const std::vector<Dataset>& domains, const LodoConfig& cfg) {
  cfg.validate();
  if (domains.size() < 2) fail(ErrorCode::InvalidConfig, "leave-one-domain-out needs >= 2 domains");
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const Dataset& ds = domains[d];
    ds.validate();
    if (!(ds.causes == domains[0].causes) || !(ds.dict == domains[0].dict)) {
      fail(ErrorCode::FingerprintMismatch, "domain '" + ds.domain_id + "' uses other id lists");
    }
    if (!ds.fully_labeled()) {
      fail(ErrorCode::NotFullyLabeled, "domain '" + ds.domain_id + "' has unlabeled deaths");
    }
    for (std::size_t e = 0; e < d; ++e) {
      if (domains[e].domain_id == ds.domain_id) {
        fail(ErrorCode::DuplicateDomainId, "domain '" + ds.domain_id + "' appears twice");
      }
    }
  }

  const std::size_t D = domains.size(), S = cfg.seeds.size();
  const Estimand estimand = estimand_for(cfg.scenario);
  const auto wants = [&](Method m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  // Every domain is a training domain in D - 1 folds; train it once per seed.
  std::vector<std::optional<BaseModelSummary>> models(D * S);
  std::vector<std::string> train_errors(D * S);
  parallel_for(D * S, cfg.workers, [&](std::size_t k) {
    const std::size_t d = k % D, s = k / D;
    GibbsConfig g = cfg.base_gibbs;
    g.seed = mix_seed(cfg.seeds[s], 7000 + d);
    try {
      models[k] = train_lcm(domains[d], cfg.base_hyper, g);
    } catch (const Error& e) {
      train_errors[k] = e.what();
    }
  });

  std::vector<UnitResult> units(D * S);
  parallel_for(D * S, cfg.workers, [&](std::size_t k) {
    const std::size_t t = k % D, s = k / D;
    const std::uint64_t seed = cfg.seeds[s];
    const Dataset& target = domains[t];
    UnitResult& out = units[k];
    const auto skip = [&](const std::string& why) {
      out.issues.push_back({target.domain_id, seed, std::nullopt, why});
    };

    std::vector<BaseModelSummary> training;
    for (std::size_t d = 0; d < D; ++d) {
      if (d == t) continue;
      if (!models[s * D + d]) {
        skip("base model for '" + domains[d].domain_id + "' failed: " + train_errors[s * D + d]);
        return;
      }
      training.push_back(*models[s * D + d]);
    }
    const FederationRegistry reg = make_registry(std::move(training));
    if (!reg.complete()) {
      skip("training domains do not cover causes: " + join_causes(target.causes, reg.uncovered()));
      return;
    }
    std::optional<ScenarioRealization> real;
    try {
      real = make_scenario(target, cfg.scenario, mix_seed(seed, 9000 + t), cfg.scenario_params);
    } catch (const Error& e) {
      skip(e.what());
      return;
    }
    const Dataset& masked = real->masked;
    const bool any_label = masked.num_labeled() > 0;

    VariantConfig vc;
    vc.ensemble = cfg.ensemble;
    vc.ensemble.seed = mix_seed(seed, 20000 + t);
    vc.ensemble.tie_pi = cfg.scenario == ScenarioKind::RandomSample;
    vc.ensemble.workers = 1;
    vc.local_hyper = cfg.base_hyper;
    vc.local_gibbs = cfg.base_gibbs;
    vc.estimand = estimand;

    const auto emit = [&](Method m, const MetricSet& ms, double secs) {
      ExperimentRow row;
      row.target_domain = target.domain_id;
      row.method = m;
      row.seed = seed;
      row.scenario = cfg.scenario;
      row.metrics = ms;
      if (cfg.record_runtime) row.runtime_s = secs;
      out.rows.push_back(std::move(row));
      return &out.rows.back();
    };
    const auto attempt = [&](Method m, auto&& body) {
      try {
        body();
      } catch (const Error& e) {
        out.issues.push_back({target.domain_id, seed, m, e.what()});
      }
    };

    for (Method m : {Method::BflPlain, Method::BflPartial, Method::BflDomain, Method::BflMix}) {
      if (!wants(m)) continue;
      attempt(m, [&] {
        Stopwatch sw;
        VariantConfig c = vc;
        c.ensemble.variant = m == Method::BflPlain     ? Variant::Plain
                             : m == Method::BflPartial ? Variant::Partial
                             : m == Method::BflDomain  ? Variant::Domain
                                                       : Variant::Mix;
        const VariantResult r = run_variant(reg, masked, c);
        emit(m, score(r.csmf, &r.classification.top, real->truth, estimand), sw.seconds());
      });
    }

    if (wants(Method::LocalSelf)) {
      attempt(Method::LocalSelf, [&] {
        Stopwatch sw;
        VariantConfig c = vc;
        c.ensemble.variant = Variant::Domain;
        c.ensemble.allow_uncovered_causes = true;
        const VariantResult r = run_variant(FederationRegistry{}, masked, c);
        emit(Method::LocalSelf, score(r.csmf, &r.classification.top, real->truth, estimand),
             sw.seconds());
      });
    }

    const bool need_single =
        wants(Method::LocalAvg) || wants(Method::GbqlLow) || wants(Method::GbqlHigh);
    if (!need_single) return;

    // Single-model semi-supervised fits: local-avg scores them directly and
    // the calibration baseline reads their raw predictions.
    Stopwatch single_sw;
    std::vector<MetricSet> components;
    PredictionTensor pred;
    pred.n = masked.size();
    pred.C = masked.num_causes();
    pred.M = reg.M();
    pred.model_ids = reg.domain_ids();
    for (const auto& r : masked.records) pred.death_ids.push_back(r.death_id);
    pred.a.assign(pred.n * pred.C * pred.M, 0.0);
    bool single_ok = true;
    for (std::size_t m = 0; m < reg.M() && single_ok; ++m) {
      try {
        VariantConfig c = vc;
        c.ensemble.variant = any_label ? Variant::Partial : Variant::Plain;
        c.ensemble.allow_uncovered_causes = true;
        c.ensemble.seed = mix_seed(vc.ensemble.seed, 500 + m);
        const VariantResult r = run_variant(make_registry({reg.summaries[m]}), masked, c);
        components.push_back(score(r.csmf, &r.classification.top, real->truth, estimand));
        const Classification raw = classify(r.phi, r.posterior);
        for (std::size_t i = 0; i < pred.n; ++i) {
          for (std::size_t cc = 0; cc < pred.C; ++cc) {
            pred.a[(i * pred.C + cc) * pred.M + m] = raw.prob(i, cc);
          }
        }
      } catch (const Error& e) {
        single_ok = false;
        for (Method mm : {Method::LocalAvg, Method::GbqlLow, Method::GbqlHigh}) {
          if (wants(mm)) out.issues.push_back({target.domain_id, seed, mm, e.what()});
        }
      }
    }
    if (!single_ok) return;
    const double single_secs = single_sw.seconds();

    if (wants(Method::LocalAvg)) {
      MetricSet avg;
      double top = 0.0, bal = 0.0;
      bool has_top = true;
      for (const auto& c : components) {
        avg.csmf_acc += c.csmf_acc / static_cast<double>(components.size());
        has_top = has_top && c.top_acc.has_value();
        if (has_top) {
          top += *c.top_acc / static_cast<double>(components.size());
          bal += *c.balanced_acc / static_cast<double>(components.size());
        }
      }
      if (has_top) {
        avg.top_acc = top;
        avg.balanced_acc = bal;
      }
      ExperimentRow* row = emit(Method::LocalAvg, avg, single_secs);
      row->component_ids = reg.domain_ids();
      row->components = components;
    }

    LabelVector labels;
    for (const auto& r : masked.records) labels.push_back(r.y);
    for (Method m : {Method::GbqlLow, Method::GbqlHigh}) {
      if (!wants(m)) continue;
      attempt(m, [&] {
        Stopwatch sw;
        CalibConfig c = cfg.calibration;
        c.beta_rate = m == Method::GbqlLow ? cfg.gbql_low_rate : cfg.gbql_high_rate;
        c.seed = mix_seed(seed, 30000 + t);
        c.workers = 1;
        const CalibrationPosterior post = fit_calibration(pred, labels, c);
        std::vector<double> csmf = post.pi_mean();
        if (estimand == Estimand::FullTarget) {
          csmf = adjust_csmf(csmf, masked.size(), labeled_counts(masked));
        }
        emit(m, score(csmf, nullptr, real->truth, estimand), single_secs + sw.seconds());
      });
    }
  });

  ExperimentReport report;
  report.scenario = cfg.scenario;
  report.estimand = estimand;
  for (const auto& d : domains) report.domain_order.push_back(d.domain_id);
  for (auto& u : units) {
    for (auto& r : u.rows) report.rows.push_back(std::move(r));
    for (auto& i : u.issues) report.issues.push_back(std::move(i));
  }
  const auto domain_rank = [&](const std::string& id) {
    return std::find(report.domain_order.begin(), report.domain_order.end(), id) -
           report.domain_order.begin();
  };
  const auto seed_rank = [&](std::uint64_t s) {
    return std::find(cfg.seeds.begin(), cfg.seeds.end(), s) - cfg.seeds.begin();
  };
  std::stable_sort(report.rows.begin(), report.rows.end(), [&](const auto& a, const auto& b) {
    return std::tuple(domain_rank(a.target_domain), seed_rank(a.seed), a.method) <
           std::tuple(domain_rank(b.target_domain), seed_rank(b.seed), b.method);
  });
  std::stable_sort(report.issues.begin(), report.issues.end(), [&](const auto& a, const auto& b) {
    return std::tuple(domain_rank(a.target_domain), seed_rank(a.seed), a.method) <
           std::tuple(domain_rank(b.target_domain), seed_rank(b.seed), b.method);
  });
  return report;
}

const ExperimentRow* ExperimentReport::find(const std::string& target, Method m,
                                            std::uint64_t seed) const {
  for (const auto& r : rows) {
    if (r.target_domain == target && r.method == m && r.seed == seed) return &r;
  }
  return nullptr;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.target_domain << ',' << to_string(r.method) << ',' << r.seed << ','
        << to_string(r.scenario) << ',' << format_double(r.metrics.csmf_acc) << ','
        << format_optional(r.metrics.top_acc) << ',' << format_optional(r.metrics.balanced_acc)
        << ',' << format_optional(r.runtime_s) << '\n';
  }
  return out.str();
}

nlohmann::json ExperimentReport::summary() const {
  nlohmann::json j;
  j["scenario"] = to_string(scenario);
  j["estimand"] = to_string(estimand);
  j["aggregation"] = "median and quartiles across seeds";
  j["local_avg"] = "arithmetic mean of the single training-domain model metrics per fold";
  j["gbql"] =
      "hard-classification calibration of top-cause predictions; no individual assignments";
  j["classification_metrics"] = "unlabeled target deaths only";

  std::vector<Method> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  std::sort(methods.begin(), methods.end());

  nlohmann::json folds = nlohmann::json::array();
  for (const auto& d : domain_order) {
    nlohmann::json per;
    for (auto m : methods) {
      std::vector<const ExperimentRow*> sel;
      for (const auto& r : rows) {
        if (r.target_domain == d && r.method == m) sel.push_back(&r);
      }
      if (!sel.empty()) per[to_string(m)] = method_summary(sel);
    }
    folds.push_back({{"target_domain", d}, {"methods", per}});
  }
  j["folds"] = folds;

  nlohmann::json overall;
  for (auto m : methods) {
    std::vector<const ExperimentRow*> sel;
    for (const auto& r : rows) {
      if (r.method == m) sel.push_back(&r);
    }
    overall[to_string(m)] = method_summary(sel);
  }
  j["overall"] = overall;

  nlohmann::json issues_json = nlohmann::json::array();
  for (const auto& i : issues) {
    issues_json.push_back({{"target_domain", i.target_domain},
                           {"seed", i.seed},
                           {"method", i.method ? nlohmann::json(to_string(*i.method)) : nullptr},
                           {"reason", i.reason}});
  }
  j["skipped"] = issues_json;
  return j;
}

ExperimentReport parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    fail(ErrorCode::MalformedFile, "report CSV header does not match");
  }
  ExperimentReport report;
  bool first = true;
  const auto number = [](const std::string& s) -> std::optional<double> {
    if (s == "NA") return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(ErrorCode::MalformedFile, "bad number '" + s + "' in report CSV");
    }
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) fail(ErrorCode::MalformedFile, "report row needs 8 fields");
    ExperimentRow r;
    r.target_domain = f[0];
    r.method = method_from_string(f[1]);
    r.seed = std::stoull(f[2]);
    r.scenario = scenario_from_string(f[3]);
    const auto csmf = number(f[4]);
    if (!csmf) fail(ErrorCode::MalformedFile, "csmf_acc missing");
    r.metrics.csmf_acc = *csmf;
    r.metrics.top_acc = number(f[5]);
    r.metrics.balanced_acc = number(f[6]);
    r.runtime_s = number(f[7]);
    if (first) {
      report.scenario = r.scenario;
      report.estimand = estimand_for(r.scenario);
      first = false;
    } else if (r.scenario != report.scenario) {
      fail(ErrorCode::MalformedFile, "report mixes scenarios");
    }
    if (std::find(report.domain_order.begin(), report.domain_order.end(), r.target_domain) ==
        report.domain_order.end()) {
      report.domain_order.push_back(r.target_domain);
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace bfl
