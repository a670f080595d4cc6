#include "bfl/data.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "bfl/error.hpp"
#include "bfl/hashing.hpp"
#include "bfl/io.hpp"

namespace bfl {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::vector<std::string> read_id_lines(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> ids;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto id = trim(line);
    if (!id.empty()) ids.emplace_back(id);
  }
  return ids;
}

}  // namespace

IdList::IdList(std::vector<std::string> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) fail(ErrorCode::MalformedFile, "empty identifier");
    if (!index_.emplace(ids_[i], i).second) {
      fail(ErrorCode::MalformedFile, "duplicate identifier '" + ids_[i] + "'");
    }
  }
  fingerprint_ = fingerprint_ids(ids_);
}

std::optional<std::size_t> IdList::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CauseList::CauseList(std::vector<std::string> ids) : IdList(std::move(ids)) {
  if (size() < 2) fail(ErrorCode::MalformedFile, "cause list needs at least 2 causes");
}

SymptomDictionary::SymptomDictionary(std::vector<std::string> ids)
    : IdList(std::move(ids)) {
  if (size() < 1) fail(ErrorCode::MalformedFile, "symptom dictionary is empty");
}

CauseList load_cause_list(const std::filesystem::path& path) {
  return CauseList(read_id_lines(path));
}

SymptomDictionary load_symptom_dictionary(const std::filesystem::path& path) {
  return SymptomDictionary(read_id_lines(path));
}

void write_id_list(const IdList& ids, const std::filesystem::path& path) {
  std::string text;
  for (const auto& id : ids.ids()) text += id + "\n";
  write_file_atomic(path, text);
}

std::size_t Dataset::num_labeled() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.y.has_value() ? 1 : 0;
  return n;
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.death_id).second) {
      fail(ErrorCode::DuplicateDeathId, r.death_id);
    }
    if (r.x.size() != num_symptoms()) {
      fail(ErrorCode::DimensionMismatch, "record " + r.death_id + " has " +
                                             std::to_string(r.x.size()) + " symptoms");
    }
    if (r.y && *r.y >= num_causes()) {
      fail(ErrorCode::UnknownCause, "label index out of range for " + r.death_id);
    }
  }
}

Dataset parse_dataset(const std::string& csv_text, const CauseList& causes,
                      const SymptomDictionary& dict, std::string domain_id) {
  Dataset d;
  d.domain_id = std::move(domain_id);
  d.causes = causes;
  d.dict = dict;

  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "death_id" || header[1] != "cause") {
    fail(ErrorCode::MalformedFile, "header must start with death_id,cause");
  }
  const std::size_t p = dict.size();
  for (std::size_t j = 2; j < header.size(); ++j) {
    const std::string name(header[j]);
    if (j - 2 >= p || name != dict[j - 2]) {
      fail(ErrorCode::UnknownSymptomColumn,
           "column " + std::to_string(j) + " '" + name + "' does not match dictionary");
    }
  }
  if (header.size() - 2 != p) {
    fail(ErrorCode::UnknownSymptomColumn,
         "expected " + std::to_string(p) + " symptom columns, found " +
             std::to_string(header.size() - 2));
  }

  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != p + 2) {
      fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(p + 2) + " cells");
    }
    Record r;
    r.death_id = std::string(cells[0]);
    if (r.death_id.empty()) {
      fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": empty death_id");
    }
    if (!seen.insert(r.death_id).second) fail(ErrorCode::DuplicateDeathId, r.death_id);
    if (!cells[1].empty()) {
      const auto idx = causes.index_of(std::string(cells[1]));
      if (!idx) fail(ErrorCode::UnknownCause, std::string(cells[1]));
      r.y = *idx;
    }
    r.x.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
      const auto cell = cells[j + 2];
      if (cell == "Y") {
        r.x.push_back(SymptomValue::Yes);
      } else if (cell == "N") {
        r.x.push_back(SymptomValue::No);
      } else if (cell == ".") {
        r.x.push_back(SymptomValue::Missing);
      } else {
        fail(ErrorCode::MalformedCell, "line " + std::to_string(line_no) + ", column " +
                                           dict[j] + ": '" + std::string(cell) + "'");
      }
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const CauseList& causes,
                     const SymptomDictionary& dict, std::optional<std::string> domain_id) {
  return parse_dataset(read_file(path), causes, dict,
                       domain_id.value_or(path.stem().string()));
}

std::string dataset_to_csv(const Dataset& d) {
  std::string out = "death_id,cause";
  for (const auto& s : d.dict.ids()) out += "," + s;
  out += "\n";
  for (const auto& r : d.records) {
    out += r.death_id;
    out += ",";
    if (r.y) out += d.causes[*r.y];
    for (auto v : r.x) {
      out += v == SymptomValue::Yes ? ",Y" : v == SymptomValue::No ? ",N" : ",.";
    }
    out += "\n";
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(d));
}

std::pair<Dataset, Dataset> partition_by_label(const Dataset& d) {
  std::vector<std::size_t> labeled, unlabeled;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (d.records[i].y ? labeled : unlabeled).push_back(i);
  }
  return {subset(d, labeled), subset(d, unlabeled)};
}

std::vector<std::size_t> cause_counts(const Dataset& d) {
  std::vector<std::size_t> counts(d.num_causes(), 0);
  for (const auto& r : d.records) {
    if (r.y) ++counts[*r.y];
  }
  return counts;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& positions) {
  Dataset out;
  out.domain_id = d.domain_id;
  out.causes = d.causes;
  out.dict = d.dict;
  out.records.reserve(positions.size());
  for (auto i : positions) out.records.push_back(d.records.at(i));
  return out;
}

Dataset strip_labels(const Dataset& d) {
  Dataset out = d;
  for (auto& r : out.records) r.y.reset();
  return out;
}

}  // namespace bfl
