#pragma once

// Run configuration: one JSON tree with nested blocks. Command-line flags
// override single leaves. Relative paths resolve against the directory of
// the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfl/calibration.hpp"
#include "bfl/data.hpp"
#include "bfl/ensemble.hpp"
#include "bfl/lcm.hpp"
#include "bfl/lodo.hpp"
#include "bfl/simulate.hpp"

namespace bfl {

class RunConfig {
 public:
  RunConfig() : tree_(nlohmann::json::object()) {}
  RunConfig(nlohmann::json tree, std::filesystem::path base_dir);

  // Sets a dotted leaf, e.g. "ensemble.chains=2". The value is parsed as
  // JSON when possible and kept as a string otherwise.
  void set(const std::string& assignment);

  // Rejects unknown keys and ill-typed values with InvalidConfig.
  void validate() const;

  const nlohmann::json& tree() const { return tree_; }
  // The tree without settings that must not influence outputs (workers).
  nlohmann::json echo() const;

  std::filesystem::path resolve(const std::string& p) const;

  std::uint64_t seed() const;
  std::vector<std::uint64_t> seeds() const;
  std::size_t workers() const;

  LcmHyper base_hyper() const;
  GibbsConfig base_gibbs() const;
  EnsembleConfig ensemble() const;
  Estimand estimand() const;
  CalibConfig calibration() const;
  LodoConfig lodo() const;
  GeneratorSpec generator() const;

  CauseList causes() const;
  SymptomDictionary dict() const;
  std::vector<Dataset> datasets() const;
  Dataset target() const;
  std::vector<std::filesystem::path> summary_paths() const;

 private:
  const nlohmann::json* find(const std::string& dotted) const;
  template <typename T>
  T get(const std::string& dotted, T fallback) const;
  std::string path_value(const std::string& dotted) const;

  nlohmann::json tree_;
  std::filesystem::path base_dir_;
};

RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

}  // namespace bfl
