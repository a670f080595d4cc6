#include "bfl/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "bfl/error.hpp"
#include "bfl/hashing.hpp"

namespace bfl {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << contents;
    if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

OutputTransaction::OutputTransaction(fs::path out_dir) : out_dir_(std::move(out_dir)) {
  staging_ = out_dir_;
  staging_ += ".staging-" + std::to_string(::getpid());
  std::error_code ec;
  fs::remove_all(staging_, ec);
  fs::create_directories(staging_, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create staging directory " + staging_.string());
}

OutputTransaction::~OutputTransaction() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

void OutputTransaction::stage(const std::string& relative, const std::string& contents) {
  const fs::path target = staging_ / relative;
  write_file_atomic(target, contents);
  checksums_[relative] = sha256_hex(contents);
}

void OutputTransaction::commit() {
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir_.string());
  for (const auto& [relative, digest] : checksums_) {
    const fs::path dest = out_dir_ / relative;
    fs::create_directories(dest.parent_path(), ec);
    fs::rename(staging_ / relative, dest, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move output into " + dest.string());
  }
  committed_ = true;
}

}  // namespace bfl
