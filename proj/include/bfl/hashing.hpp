#pragma once

#include <span>
#include <string>
#include <string_view>

namespace bfl {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

// Digest of an ordered identifier list (newline-joined); used as the
// fingerprint for cause lists and symptom dictionaries.
std::string fingerprint_ids(std::span<const std::string> ids);

}  // namespace bfl
