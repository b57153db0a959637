#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "cemfd/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference complete-electrode EIT solver and convergence lab"};
  app.require_subcommand(1);

  cemfd::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string which;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Run configuration file")->required();
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Override the configured random seed");
  };
  auto* forward = app.add_subcommand("forward", "Solve the discrete state problem");
  auto* invert = app.add_subcommand("invert", "Reconstruct the control by projected gradients");
  auto* study = app.add_subcommand("study", "Run a mesh-refinement study");
  auto* check = app.add_subcommand("check", "Run a single check");
  for (auto* sub : {forward, invert, study, check}) add_common(sub);
  check->add_option("which", which, "energy, steklov, pmap or gradient")
      ->required()
      ->check(CLI::IsMember({"energy", "steklov", "pmap", "gradient"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cemfd::kExitConfig;
  }
  for (auto* sub : {forward, invert, study, check}) {
    if (sub->count("--seed")) opts.seed = seed;
  }

  if (*forward) return cemfd::cmd_forward(opts);
  if (*invert) return cemfd::cmd_invert(opts);
  if (*study) return cemfd::cmd_study(opts);
  return cemfd::cmd_check(opts, which);
}
