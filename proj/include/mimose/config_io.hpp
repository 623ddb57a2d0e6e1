// SPDX-License-Identifier: Apache-2.0
//
// JSON configuration loading with strict schema validation and
// key=value overrides.

#pragma once

#include "mimose/se_engine.hpp"

#include <string>
#include <vector>

namespace mimose {

struct RunConfig {
  SystemConfig scenario;
  PilotBudget budget;
  RegularizationR reg_r;
  RegularizationP reg_p;
};

/// Parses the nested-section JSON config (scenario / budget / power /
/// regularization), applies dotted-path overrides like "scenario.M=16",
/// validates, and rejects unknown keys.  Throws std::invalid_argument
/// naming the offending key.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

/// Same, from JSON text (used by tests).
RunConfig parse_config(const std::string& json_text,
                       const std::vector<std::string>& overrides = {});

}  // namespace mimose
