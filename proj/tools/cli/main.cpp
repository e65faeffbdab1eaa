// maxfun: command-line front end.
//
//   maxfun pool        --config run.json [--set key=value ...]
//   maxfun csc-verify  ...
//   maxfun classify    ...
//   maxfun selftest    ...
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"

namespace {

using namespace maxfun::cli;

struct Command {
  std::string name;
  std::string help;
  std::function<json()> defaults;
  std::function<int(const json&)> run;
  CLI::App* app = nullptr;
  std::string config{};
  std::vector<std::string> sets{};
  bool dump = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pooling operators, sparse-coding stability checks and pooling comparisons"};
  app.require_subcommand(1);

  std::vector<Command> commands{
      {"pool", "Pool one image or feature file", pool_defaults, cmd_pool},
      {"csc-verify", "Check the pooled sparse-coding stability bounds on seeded trials", csc_verify_defaults,
       cmd_csc_verify},
      {"classify", "Compare pooling strategies on an image dataset", classify_defaults, cmd_classify},
      {"selftest", "Run the oracle and invariant suites", selftest_defaults, cmd_selftest},
  };
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    c.app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    c.app->add_option("--set", c.sets, "Override one key, e.g. --set window=9 (repeatable)");
    c.app->add_flag("--print-config", c.dump, "Print the effective configuration and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      const json cfg = resolve_config(c.defaults(), c.config.empty() ? std::nullopt : std::optional(c.config), c.sets);
      if (c.dump) {
        std::cout << cfg.dump(2) << '\n';
        return kOk;
      }
      return c.run(cfg);
    } catch (const maxfun::InvalidArgument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kValidation;
    } catch (const maxfun::FormatError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kValidation;
    } catch (const std::exception& e) {
      std::cerr << "runtime error: " << e.what() << '\n';
      return kRuntime;
    }
  }
  return kValidation;
}
