#pragma once

#include "pipeline_config.hpp"

namespace coltrack::cli {

void cmd_simulate(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
void cmd_track(const PipelineConfig& config);
void cmd_eval(const PipelineConfig& config);
void cmd_report(const PipelineConfig& config);

}  // namespace coltrack::cli
