#pragma once

#include <optional>
#include <string>

#include "staykit/cli/config.hpp"

namespace staykit::cli {

// Flag overrides applied on top of the config file.
struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool deterministic = false;  // forces single-threaded numerics
  std::optional<std::string> output_dir;
  std::optional<std::string> checkpoint;
};

PipelineConfig apply_flags(PipelineConfig cfg, const GlobalFlags& flags);

// All commands return a process exit code: 0 success, 1 internal error,
// 2 bad input or configuration.
int cmd_ingest(const PipelineConfig& cfg);
int cmd_weaklabel(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg, const std::string& loss_mode);  // auto|weak|supervised
int cmd_finetune(const PipelineConfig& cfg);
int cmd_evaluate(const PipelineConfig& cfg);
int cmd_baseline(const PipelineConfig& cfg);
int cmd_tmd(const PipelineConfig& cfg);

}  // namespace staykit::cli
