#pragma once

// Within-target label-shift generators. Each realization hands methods a
// masked dataset (labels present only on the labeled part) and keeps the full
// ground truth in a separate ledger that only the metric layer reads.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bfl/data.hpp"

namespace bfl {

enum class ScenarioKind { RandomSample, MildShift, SevereShift };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& s);

struct ScenarioParams {
  double label_fraction = 0.2;  // random_sample
  double mild_labeled_share = 0.2;
  double severe_beta_shape = 0.2;
};

struct ShiftScenario {
  ScenarioKind kind = ScenarioKind::RandomSample;
  double label_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::vector<double> realized_q;          // severe_shift
  std::vector<double> realized_pi_tilde;   // mild_shift, labeled part
  std::vector<double> realized_pi;         // mild_shift, unlabeled part
};

struct GroundTruth {
  std::vector<std::size_t> labels;  // true cause of every masked record
  std::vector<std::uint8_t> is_labeled;
  std::vector<double> full_csmf;
  std::vector<double> labeled_csmf;
  std::vector<double> unlabeled_csmf;

  std::vector<std::size_t> unlabeled_positions() const;
};

struct ScenarioRealization {
  ShiftScenario scenario;
  Dataset masked;
  GroundTruth truth;
};

ScenarioRealization make_scenario(const Dataset& target, ScenarioKind kind, std::uint64_t seed,
                                  const ScenarioParams& params = {});

// Integer counts summing to `total` whose shares are closest to `shares`
// (largest remainder; ties go to the lower index).
std::vector<std::size_t> largest_remainder(const std::vector<double>& shares, std::size_t total);

}  // namespace bfl
