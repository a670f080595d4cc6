#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace bfl {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Collects a command's output files in a staging directory and moves them
// into the output directory only on commit(). Destroying an uncommitted
// transaction removes everything it staged.
class OutputTransaction {
 public:
  explicit OutputTransaction(std::filesystem::path out_dir);
  ~OutputTransaction();

  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;

  // `relative` is relative to the output directory.
  void stage(const std::string& relative, const std::string& contents);
  // SHA-256 of every staged file, keyed by relative path.
  const std::map<std::string, std::string>& checksums() const { return checksums_; }
  void commit();

  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  std::filesystem::path out_dir_;
  std::filesystem::path staging_;
  std::map<std::string, std::string> checksums_;
  bool committed_ = false;
};

}  // namespace bfl
