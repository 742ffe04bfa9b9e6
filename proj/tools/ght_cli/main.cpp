#include <iostream>

#include "CLI11.hpp"
#include "ght/errors.hpp"
#include "harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace ght::cli;
  CLI::App app{"Geometric (hyper)transformer experiment runner"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string config, out;
  std::int64_t seed = 0;
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(Run&);
  };
  const Entry entries[] = {
      {"metric", "Pairwise W_p, AW_p, TV and Gaussian distances", cmd_metric},
      {"complexity", "Model complexity tables as CSV", cmd_complexity},
      {"static-fit", "Fit a geometric transformer over N, q grids", cmd_static_fit},
      {"dynamic-fit", "Fit a geometric hypertransformer to a causal map", cmd_dynamic_fit},
      {"paths", "Simulate SDE paths, fit the exponential envelope, report membership", cmd_paths},
  };
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: config \"out\" or ./ght_out)");
    sub->add_option("--seed", seed, "Overrides the config seed")->check(CLI::NonNegativeNumber);
    sub->add_flag("--strict", opt.strict, "Reject unspecified constants instead of filling defaults");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : entries)
    if (app.got_subcommand(e.name)) chosen = &e;
  opt.config_path = config;
  opt.out_dir = out;
  if (app.get_subcommand(chosen->name)->count("--seed") > 0) opt.seed = seed;

  try {
    Run run(chosen->name, opt);
    const int code = chosen->fn(run);
    run.finish();
    return code;
  } catch (const ght::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ght::UnsupportedError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ght::OutOfWindowError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ght::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const ght::CappedSearchError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  }
}
