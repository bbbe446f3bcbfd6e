#pragma once

#include "strb/reduced.hpp"

namespace strb {

// Versioned binary container: magic + JSON provenance header (problem id,
// mesh hash, grid, alpha, bound case) followed by the dense payload.
// Round-trips are bit-identical.  Loading validates the header against the
// supplied problem and rebuilds the discrete skeleton; loaded models are
// frozen (online use only).
void save_model(const ReducedModel& model, const std::string& path);
ReducedModel load_model(const std::string& path, const OcpProblem& p);

}  // namespace strb
