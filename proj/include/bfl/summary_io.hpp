#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bfl/data.hpp"
#include "bfl/lcm.hpp"

namespace bfl {

inline constexpr const char* kSummaryFormatVersion = "1.0.0";

// Canonical JSON document for a summary: sorted keys, shortest round-trip
// floats, explicit nulls for absent-cause rows, and a SHA-256 checksum over
// the compact serialization of every other field.
std::string serialize_summary(const BaseModelSummary& s);
BaseModelSummary parse_summary(const std::string& text, const CauseList& causes,
                               const SymptomDictionary& dict);

void export_summary(const BaseModelSummary& s, const std::filesystem::path& path);
BaseModelSummary import_summary(const std::filesystem::path& path, const CauseList& causes,
                                const SymptomDictionary& dict);

struct FederationRegistry {
  std::vector<BaseModelSummary> summaries;
  std::string cause_list_fingerprint;
  std::string dict_fingerprint;
  std::vector<std::size_t> coverage;

  std::size_t M() const { return summaries.size(); }
  std::size_t C() const { return coverage.size(); }
  bool complete() const;
  std::vector<std::size_t> uncovered() const;
  std::vector<std::string> domain_ids() const;
};

// Checks shared fingerprints and unique domain ids, computes coverage.
// Order is preserved: it fixes the model index of every domain weight.
FederationRegistry make_registry(std::vector<BaseModelSummary> summaries);

FederationRegistry build_registry(const std::vector<std::filesystem::path>& paths,
                                  const CauseList& causes, const SymptomDictionary& dict);

}  // namespace bfl
