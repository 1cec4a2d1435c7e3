#pragma once

#include <map>
#include <string>
#include <vector>

namespace fcl {

/// Flat dot-namespaced key-value configuration. Unknown keys are rejected;
/// resolving materializes every default so runs are fully reproducible from
/// the written-back config.
using Config = std::map<std::string, std::string>;

Config parse_config_text(const std::string& text);
Config resolve_config(const Config& given);  // defaults + validation
std::string config_to_text(const Config& resolved);

/// Entry point. Exit codes: 0 success, 1 check/runtime failure, 2 usage or
/// validation error.
int cli_run(int argc, char** argv);

}  // namespace fcl
