// Experiment configuration files.
//
// A config is a JSON document with a "schema" version field. Unknown keys
// are rejected with the dotted path of the offending field. `to_json`
// produces the canonical echo stored in run manifests; parsing the echo
// yields an equivalent configuration.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "rbo/analysis.h"
#include "rbo/spectra.h"

namespace rbo {

inline constexpr int kConfigSchema = 1;

struct WegnerSettings {
  WegnerBound::Mode mode = WegnerBound::Mode::H;
  std::size_t min_count = 100;
};

struct DosTransformSettings {
  double beta = 1.0;
  // Density of states of H. Without one, the command estimates it from an
  // ensemble of H realizations under `boundary`.
  std::optional<DensitySpec> source;
  BoundaryMode boundary = BoundaryMode::Neumann;
  EnergyGrid grid{-4.0, 4.0, 801};
};

// dos command: one histogram per width, b = center + w * Uniform[-1/2, 1/2]
// with the center taken from the configured b law (w = 0 gives b = center).
// The w = 0 baseline is always run, listed or not.
struct SweepSettings {
  std::vector<double> b_widths;
};

struct RunConfig {
  ExperimentConfig experiment;
  WegnerSettings wegner;
  LifshitsRun lifshits{{0.4, 0.3, 0.2, 0.15, 0.1, 0.07, 0.05}, 0.5, 4.0, 2000};
  bool lifshits_alpha_set = false;  // alpha defaults to d/2
  std::optional<DosTransformSettings> dostransform;
  std::optional<SweepSettings> sweep;

  double lifshits_alpha() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json density_to_json(const DensitySpec& d);
DensitySpec density_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace rbo
