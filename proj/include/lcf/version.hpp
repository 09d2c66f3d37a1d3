#pragma once

namespace lcf {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRngVersion = "philox4x32-10/v1";

// Conventions fixed for the whole artifact; reports repeat these so results
// are interpretable without the source.
inline constexpr const char* kMetricSignature = "diag(+,-,-,-)";
inline constexpr const char* kFourierConvention =
    "f~(k) = \\int f(x) exp(+i(k0 x0 - k.x)) d4x ; positive frequency = k0 > 0";

}  // namespace lcf
