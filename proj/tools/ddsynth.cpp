// Command-line driver: one subcommand per pipeline stage, plus `pipeline` to run them all.
#include "ddsynth/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace ddsynth;

int main(int argc, char** argv) {
  CLI::App app{"DDoS traffic synthesis pipeline"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string workspace;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("-w,--workspace", workspace, "Workspace directory (default: the config's `workspace`)");
  app.add_option("-s,--seed", seed, "Master seed; replaces every seed in the config");

  std::vector<std::pair<CLI::App*, std::optional<Stage>>> commands;
  for (Stage s : kStages) commands.emplace_back(app.add_subcommand(std::string(to_string(s)), "Run the " + std::string(to_string(s)) + " stage"), s);
  commands.emplace_back(app.add_subcommand("pipeline", "Run every stage in order"), std::nullopt);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = PipelineConfig::load(config_path);
    if (seed) cfg.set_master_seed(*seed);
    const std::filesystem::path ws =
        !workspace.empty() ? std::filesystem::path(workspace) : cfg.resolve(cfg.workspace.empty() ? "workspace" : cfg.workspace);
    const StageLogger log = [](Stage s, const std::string& msg) { std::cerr << "[" << to_string(s) << "] " << msg << "\n"; };
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      if (stage)
        run_stage(*stage, cfg, ws, log);
      else
        run_pipeline(cfg, ws, log);
    }
  } catch (const StageOrderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
