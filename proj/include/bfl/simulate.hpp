#pragma once

// Synthetic multi-domain data from the latent class generative model. Every
// domain m has its own cause prevalence and per-cause class weights nu and
// Bernoulli profiles theta; an optional target domain draws each death's
// conditional from domain h ~ Cat(lambda_y).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfl/data.hpp"

namespace bfl {

struct DomainSpec {
  std::string id;
  std::size_t n = 0;
  std::vector<double> pi;     // C; empty means uniform
  std::vector<double> nu;     // C x K; empty means drawn
  std::vector<double> theta;  // C x K x p; empty means drawn
};

struct TargetSpec {
  std::string id = "target";
  std::size_t n = 0;
  std::vector<double> pi;      // C
  std::vector<double> lambda;  // C x M
  bool labeled = true;
};

struct GeneratorSpec {
  std::size_t C = 0;
  std::size_t K = 0;
  std::size_t p = 0;
  std::vector<std::string> causes;    // default cause_1..cause_C
  std::vector<std::string> symptoms;  // default s_1..s_p
  std::vector<DomainSpec> domains;
  std::optional<TargetSpec> target;
  // Drawn profiles: a shared base theta ~ Beta(a, b) per (c, k, j); each
  // domain redraws an entry with probability `heterogeneity`.
  double theta_a = 0.5;
  double theta_b = 0.5;
  double heterogeneity = 1.0;
  double nu_conc = 1.0;
  double missing_rate = 0.0;
  std::uint64_t seed = 1;

  // Throws InvalidGenerator.
  void validate() const;
};

GeneratorSpec generator_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorSpec& g);

struct SimulationOutput {
  CauseList causes;
  SymptomDictionary dict;
  std::vector<Dataset> domains;
  std::optional<Dataset> target;
  std::vector<std::vector<double>> nu;     // per domain, C x K
  std::vector<std::vector<double>> theta;  // per domain, C x K x p
  std::vector<std::size_t> target_source;  // generating domain of each target death
  std::vector<std::size_t> target_labels;  // true causes, kept when the target is unlabeled

  // Generating parameters and realized CSMFs.
  nlohmann::json ledger() const;
};

SimulationOutput simulate(const GeneratorSpec& g);

}  // namespace bfl
