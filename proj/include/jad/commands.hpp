#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <utility>

#include "jad/config.hpp"
#include "jad/dataset.hpp"
#include "jad/network.hpp"

namespace jad::cli {

/// Training and test splits as configured: data.test_n samples held out from
/// the tail.
std::pair<Dataset, Dataset> load_run_data(const RunConfig& cfg);

/// Fresh network for the configured widths (input and class count filled in
/// from the data when model.dims is unset).
Network build_network(const RunConfig& cfg, const Dataset& data);

// Each command writes fixed-name artifacts under cfg.out_dir and a short
// human-readable summary to `log`.
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_certify(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_report_spectral(const std::filesystem::path& checkpoint, std::ostream& out);
void cmd_attack(const RunConfig& cfg, std::ostream& log);
void cmd_amp(const RunConfig& cfg, std::ostream& log);
void cmd_eval(const RunConfig& cfg, std::ostream& log);
void cmd_adaptive(const RunConfig& cfg, std::ostream& log);
void cmd_corrupt_study(const RunConfig& cfg, std::ostream& log);

/// Runs `body` and maps failures to exit codes: 0 success, 2 configuration,
/// input or I/O errors, 3 numeric failures. The message goes to `err`.
int run_guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace jad::cli
