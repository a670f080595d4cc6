#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bfl {

// An ordered list of unique, non-empty identifiers with a content
// fingerprint. Shared by the cause list and the symptom dictionary: the
// position of an identifier is its index everywhere in the library.
class IdList {
 public:
  IdList() = default;
  explicit IdList(std::vector<std::string> ids);

  std::size_t size() const { return ids_.size(); }
  const std::string& operator[](std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::optional<std::size_t> index_of(const std::string& id) const;

  bool operator==(const IdList& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string fingerprint_;
};

class CauseList : public IdList {
 public:
  CauseList() = default;
  explicit CauseList(std::vector<std::string> ids);
};

class SymptomDictionary : public IdList {
 public:
  SymptomDictionary() = default;
  explicit SymptomDictionary(std::vector<std::string> ids);
};

// Newline-delimited identifier files; blank lines are ignored.
CauseList load_cause_list(const std::filesystem::path& path);
SymptomDictionary load_symptom_dictionary(const std::filesystem::path& path);
void write_id_list(const IdList& ids, const std::filesystem::path& path);

enum class SymptomValue : std::uint8_t { No = 0, Yes = 1, Missing = 2 };

struct Record {
  std::string death_id;
  std::vector<SymptomValue> x;
  std::optional<std::size_t> y;

  bool operator==(const Record&) const = default;
};

struct Dataset {
  std::string domain_id;
  std::vector<Record> records;
  CauseList causes;
  SymptomDictionary dict;

  std::size_t size() const { return records.size(); }
  std::size_t num_causes() const { return causes.size(); }
  std::size_t num_symptoms() const { return dict.size(); }
  std::size_t num_labeled() const;
  bool fully_labeled() const { return num_labeled() == size(); }

  // Checks record-level invariants (unique ids, label range, row width).
  void validate() const;

  bool operator==(const Dataset& other) const {
    return domain_id == other.domain_id && records == other.records &&
           causes == other.causes && dict == other.dict;
  }
};

// Parses the `death_id,cause,<symptom_1>,...,<symptom_p>` CSV schema. The
// domain id defaults to the file stem.
Dataset load_dataset(const std::filesystem::path& path, const CauseList& causes,
                     const SymptomDictionary& dict,
                     std::optional<std::string> domain_id = std::nullopt);
Dataset parse_dataset(const std::string& csv_text, const CauseList& causes,
                      const SymptomDictionary& dict, std::string domain_id);
std::string dataset_to_csv(const Dataset& d);
void write_dataset(const Dataset& d, const std::filesystem::path& path);

std::pair<Dataset, Dataset> partition_by_label(const Dataset& d);
std::vector<std::size_t> cause_counts(const Dataset& d);

// Copy of `d` restricted to the given record positions, in the given order.
Dataset subset(const Dataset& d, const std::vector<std::size_t>& positions);

// Copy of `d` with every label removed.
Dataset strip_labels(const Dataset& d);

}  // namespace bfl
