#pragma once

namespace bfl {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace bfl
