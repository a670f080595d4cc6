#pragma once

// Leave-one-domain-out experiment driver. Each domain in turn is the target;
// the others are training domains. Fold x seed pairs are independent units of
// work, and the report is sorted before it is emitted, so output does not
// depend on the worker count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfl/calibration.hpp"
#include "bfl/data.hpp"
#include "bfl/ensemble.hpp"
#include "bfl/lcm.hpp"
#include "bfl/scenario.hpp"

namespace bfl {

enum class Method { BflPlain, BflPartial, BflDomain, BflMix, LocalSelf, LocalAvg, GbqlLow, GbqlHigh };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::vector<Method> all_methods();

struct LodoConfig {
  LcmHyper base_hyper;
  GibbsConfig base_gibbs;
  EnsembleConfig ensemble;
  CalibConfig calibration;
  double gbql_low_rate = 0.5;
  double gbql_high_rate = 50.0;
  ScenarioKind scenario = ScenarioKind::RandomSample;
  ScenarioParams scenario_params;
  std::vector<std::uint64_t> seeds{1};
  std::vector<Method> methods = all_methods();
  std::size_t workers = 1;
  // Wall-clock runtimes make the CSV differ between runs; off by default.
  bool record_runtime = false;

  void validate() const;
};

struct MetricSet {
  double csmf_acc = 0.0;
  std::optional<double> top_acc;
  std::optional<double> balanced_acc;
};

struct ExperimentRow {
  std::string target_domain;
  Method method = Method::BflPlain;
  std::uint64_t seed = 0;
  ScenarioKind scenario = ScenarioKind::RandomSample;
  MetricSet metrics;
  std::optional<double> runtime_s;
  // local_avg only: one entry per training-domain model, registry order
  std::vector<std::string> component_ids;
  std::vector<MetricSet> components;
};

struct FoldIssue {
  std::string target_domain;
  std::uint64_t seed = 0;
  std::optional<Method> method;  // empty when the whole fold was skipped
  std::string reason;
};

struct ExperimentReport {
  ScenarioKind scenario = ScenarioKind::RandomSample;
  Estimand estimand = Estimand::FullTarget;
  std::vector<std::string> domain_order;
  std::vector<ExperimentRow> rows;
  std::vector<FoldIssue> issues;

  const ExperimentRow* find(const std::string& target, Method m, std::uint64_t seed) const;
  std::string to_csv() const;
  nlohmann::json summary() const;
};

// Metric estimand for a scenario: full target for a random labeled sample,
// unlabeled subset under label shift.
Estimand estimand_for(ScenarioKind kind);

ExperimentReport run_lodo(const std::vector<Dataset>& domains, const LodoConfig& cfg);

// Scores one method output against the ground truth. `top` covers every
// masked record; only unlabeled positions are scored. Returns no
// classification metrics when `top` is null.
MetricSet score(const std::vector<double>& csmf, const std::vector<std::size_t>* top,
                const GroundTruth& truth, Estimand estimand);

// Rebuilds rows from the CSV written by ExperimentReport::to_csv.
ExperimentReport parse_report_csv(const std::string& csv);

}  // namespace bfl
