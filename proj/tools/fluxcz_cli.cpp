// Command-line front end over the C API.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluxcz/fluxcz.h"

int main(int argc, char** argv) {
  CLI::App app{"Fluxonium microwave-activated CZ gate simulator"};
  app.set_version_flag("--version", std::string(fluxcz_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  std::string out_dir = ".";
  long seed = 0;
  app.add_option("--config", config, "device config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str()->check(CLI::NonNegativeNumber);

  // Per-command flag storage, keyed by command then flag.
  std::map<std::string, std::map<std::string, std::string>> values;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (size_t i = 0; i < fluxcz_command_count(); ++i) {
    const std::string name = fluxcz_command_name(i);
    CLI::App* sub = app.add_subcommand(name, fluxcz_command_help(i));
    auto& slot = values[name];
    for (size_t k = 0; k < fluxcz_command_flag_count(i); ++k) {
      const char* flag = nullptr;
      const char* def = nullptr;
      const char* help = nullptr;
      fluxcz_command_flag(i, k, &flag, &def, &help);
      auto* opt = sub->add_option("--" + std::string(flag), slot[flag], help);
      if (def && *def) opt->default_str(def);
    }
    if (fluxcz_command_needs_config(i)) sub->footer("Requires --config.");
    subs.emplace_back(name, sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    std::vector<std::string> keys;
    std::vector<std::string> vals;
    for (const auto& [flag, value] : values[name]) {
      if (sub->get_option("--" + flag)->count() == 0) continue;
      keys.push_back(flag);
      vals.push_back(value);
    }
    keys.push_back("seed");
    vals.push_back(std::to_string(seed));
    std::vector<const char*> kp, vp;
    for (size_t i = 0; i < keys.size(); ++i) {
      kp.push_back(keys[i].c_str());
      vp.push_back(vals[i].c_str());
    }
    const int status = fluxcz_run_command(name.c_str(), config.empty() ? nullptr : config.c_str(),
                                          kp.data(), vp.data(), kp.size(), out_dir.c_str());
    if (status != FLUXCZ_OK) {
      std::fprintf(stderr, "fluxcz %s: %s: %s\n", name.c_str(), fluxcz_status_name(status),
                   fluxcz_last_error());
      return status;
    }
    std::printf("%s\n", fluxcz_last_summary());
  }
  return 0;
}
