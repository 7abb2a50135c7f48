#pragma once

#include <string>

namespace locotrack {

// Quick built-in oracle checks: local 4D correlation vs its loop oracle,
// shape contracts, kernel softargmax recovery, attention bias masking.
// Appends one line per check to `report`; returns false if any check fails.
bool run_selftest(std::string& report);

}  // namespace locotrack
