#pragma once

#include "kpspin/model.hpp"
#include "kpspin/classical_map.hpp"
#include "kpspin/stability.hpp"
#include "kpspin/chaos_metrics.hpp"
#include "kpspin/lapack.hpp"
#include "kpspin/floquet.hpp"
#include "kpspin/quantum_metrics.hpp"
#include "kpspin/scan.hpp"

namespace kpspin {

inline constexpr const char* version = "0.1.0";

}  // namespace kpspin
