#pragma once

#include <filesystem>
#include <vector>

#include "bench_config.hpp"

namespace simba::bench {

// Reads every trace in the directory and writes loss-vs-iteration and
// loss-vs-wall-clock SVG charts, one series per optimizer (averaged over
// runs). Series order follows the echoed config when present. Returns the
// written figure paths.
std::vector<std::filesystem::path> plot_traces(const std::filesystem::path& trace_dir,
                                               const std::filesystem::path& out_dir);

}  // namespace simba::bench
