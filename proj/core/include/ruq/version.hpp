#pragma once

namespace ruq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ruq
