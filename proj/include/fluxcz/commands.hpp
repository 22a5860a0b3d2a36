#pragma once

#include <map>
#include <string>
#include <vector>

namespace fluxcz {

struct FlagInfo {
  std::string name;           // without leading dashes
  std::string default_value;  // empty means required or unset
  std::string help;
};

struct CommandInfo {
  std::string name;
  std::string help;     // includes output files and CSV columns
  bool needs_config = true;
  std::vector<FlagInfo> flags;
};

const std::vector<CommandInfo>& command_catalog();

struct CommandRequest {
  std::string name;
  std::string config_path;
  std::string out_dir = ".";
  // Command flags by name; unknown names are rejected. "seed" is always accepted.
  std::map<std::string, std::string> flags;
};

struct CommandResult {
  std::vector<std::string> files;  // written paths
  std::string summary;             // one line for stdout
};

CommandResult run_command(const CommandRequest& request);

// Parses "pi", "-pi/2", "0.5*pi", "3.14" and the like, in radians.
double parse_angle(const std::string& text);

// Shortest round-trip decimal text of a double.
std::string format_double(double x);

}  // namespace fluxcz
