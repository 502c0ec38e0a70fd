// staykit: stay-region extraction toolkit.
//
// Pipelines: ingest -> weaklabel -> train -> finetune -> evaluate, plus the
// classical baselines and the transportation-mode variant.

#include <iostream>

#include <CLI11.hpp>

#include "staykit/cli/commands.hpp"
#include "staykit/common.hpp"

using namespace staykit;

int main(int argc, char** argv) {
  CLI::App app{"staykit: stay-region extraction from GNSS trajectories"};
  app.require_subcommand(1);

  std::string config_path;
  cli::GlobalFlags flags;
  std::string loss_mode = "auto";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "pipeline config (JSON)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { flags.seed = v; }, "override the config seed");
    cmd->add_option_function<std::size_t>(
        "--threads", [&](std::size_t v) { flags.threads = v; }, "cap worker threads");
    cmd->add_flag("--deterministic", flags.deterministic,
                  "single-threaded numerics for byte-reproducible runs");
    cmd->add_option_function<std::string>(
        "-o,--output-dir", [&](const std::string& v) { flags.output_dir = v; },
        "override the output directory");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parse, clean, and project a dataset");
  add_common(ingest);
  CLI::App* weaklabel =
      app.add_subcommand("weaklabel", "derive weak labels from OSM-style data");
  add_common(weaklabel);
  CLI::App* train = app.add_subcommand("train", "train the encoder + decoder");
  add_common(train);
  train->add_option("--loss", loss_mode, "auto|weak|supervised (default auto)");
  CLI::App* finetune =
      app.add_subcommand("finetune", "decoder-only fine-tuning with participant CV");
  add_common(finetune);
  finetune->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& v) { flags.checkpoint = v; },
      "pre-trained checkpoint");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on labeled data");
  add_common(evaluate);
  evaluate->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& v) { flags.checkpoint = v; },
      "checkpoint to score");
  CLI::App* baseline =
      app.add_subcommand("baseline", "classical extractors with hyperparameter search");
  add_common(baseline);
  CLI::App* tmd = app.add_subcommand("tmd", "transportation mode detection variant");
  add_common(tmd);

  CLI11_PARSE(app, argc, argv);

  try {
    cli::PipelineConfig cfg = config_path.empty()
                                  ? cli::PipelineConfig{}
                                  : cli::PipelineConfig::from_file(config_path);
    cfg = cli::apply_flags(cfg, flags);

    if (ingest->parsed()) return cli::cmd_ingest(cfg);
    if (weaklabel->parsed()) return cli::cmd_weaklabel(cfg);
    if (train->parsed()) return cli::cmd_train(cfg, loss_mode);
    if (finetune->parsed()) return cli::cmd_finetune(cfg);
    if (evaluate->parsed()) return cli::cmd_evaluate(cfg);
    if (baseline->parsed()) return cli::cmd_baseline(cfg);
    if (tmd->parsed()) return cli::cmd_tmd(cfg);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
