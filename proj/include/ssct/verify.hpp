#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssct/io.hpp"

namespace ssct {

struct CheckResult {
  std::string id;     // criterion number plus a letter for sub-checks, e.g. "3b"
  std::string name;
  bool passed = false;
  std::string tolerance;  // human-readable bound
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::string error;  // exception text when the check threw
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  // Deterministic for a fixed config: no timings, no host data.
  nlohmann::ordered_json to_json() const;
};

// Runs the invariant suite for criteria 1 to 11. Each check is isolated: an exception fails that
// check only. timings (optional) receives wall-clock seconds per criterion.
VerifyReport run_verify(const ExperimentConfig& cfg, const std::function<void(const CheckResult&)>& on_check = {},
                        std::vector<std::pair<std::string, double>>* timings = nullptr);

}  // namespace ssct
