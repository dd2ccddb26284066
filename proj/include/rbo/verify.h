// Exact finite-volume identity suites behind the `verify` command.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rbo {

enum class VerifyScale { Small, Default, Large };

VerifyScale verify_scale_from_string(const std::string& s);

// Mutations of the code under test, used to show the suites can fail.
enum class Fault {
  None,
  NegatedGamma,  // Dirichlet restriction built as -Delta_N - 2 Gamma
};

Fault fault_from_string(const std::string& s);

struct VerifyOptions {
  std::uint64_t seed = 1;
  VerifyScale scale = VerifyScale::Default;
  Fault fault = Fault::None;
  // Run a single instance with this instance seed in every suite.
  std::optional<std::uint64_t> replay;
  std::size_t threads = 0;
};

struct VerifyFailure {
  std::uint64_t instance_seed = 0;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  double worst = 0.0;  // largest normalized defect seen
  std::vector<VerifyFailure> failures;
  double seconds = 0.0;
  bool passed() const { return failures.empty(); }
};

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool passed() const;
};

// Suites: symmetry, square-identity, parity-equivalence, gap-bound,
// zero-split, bracketing-sandwich, const-b-map.
VerifyReport run_verify(const VerifyOptions& opts);

nlohmann::json to_json(const VerifyReport& r, const VerifyOptions& opts);

}  // namespace rbo
