#include "rbo/cli.h"

#include <algorithm>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include "CLI11.hpp"
#include "rbo/config.h"
#include "rbo/parallel.h"
#include "rbo/verify.h"

#ifndef RBO_VERSION
#define RBO_VERSION "0.0.0"
#endif

namespace rbo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct Run {
  Run(std::string cmd, std::ostream& o, std::ostream& e) : command(std::move(cmd)), out(o), err(e) {}

  std::string command;
  std::optional<std::string> config_path;
  std::optional<RunConfig> cfg;
  fs::path out_dir = "rbo_out";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  bool quiet = false;
  std::ostream& out;
  std::ostream& err;

  std::vector<fs::path> written;
  json timings = json::object();
  json summary = json::object();

  template <class... Args>
  void say(fmt::format_string<Args...> f, Args&&... args) {
    if (!quiet) fmt::print(out, "{}\n", fmt::format(f, std::forward<Args>(args)...));
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(out_dir);
    const fs::path p = out_dir / name;
    written.push_back(p);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
    body(os);
    os.flush();
    if (!os) throw std::runtime_error(fmt::format("write failed for '{}'", p.string()));
    say("wrote {}", p.string());
  }

  template <class F>
  auto timed(const std::string& phase, F&& f) {
    Clock c;
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[phase] = c.seconds();
    } else {
      auto r = f();
      timings[phase] = c.seconds();
      return r;
    }
  }

  RunConfig& config() {
    if (!cfg) throw ConfigError(fmt::format("{}: --config is required", command));
    return *cfg;
  }
};

json ensemble_summary(const EnsembleResult& r, std::size_t requested) {
  return {{"requested", requested}, {"succeeded", r.spectra.size()}, {"failed", r.failed}};
}

int cmd_ids(Run& run) {
  const auto& ex = run.config().experiment;
  const auto res = run.timed("ensemble", [&] { return run_ensemble(ex); });
  run.summary["realizations"] = ensemble_summary(res, ex.realizations);
  run.write("ids.csv", [&](std::ostream& os) { write_ids_csv(os, res); });
  return kExitOk;
}

int cmd_gap(Run& run) {
  const auto& ex = run.config().experiment;
  const auto res = run.timed("ensemble", [&] { return run_ensemble(ex); });
  const auto g = gap_estimate(res);
  run.summary["realizations"] = ensemble_summary(res, ex.realizations);
  run.summary["min_gap"] = g.min_gap;
  run.say("min |E| over {} realizations: {:.10g}", res.spectra.size(), g.min_gap);
  run.write("gap.csv", [&](std::ostream& os) { write_gap_csv(os, res); });
  return kExitOk;
}

int cmd_dos(Run& run) {
  const auto& cfg = run.config();
  if (!cfg.sweep) {
    const auto res = run.timed("ensemble", [&] { return run_ensemble(cfg.experiment); });
    run.summary["realizations"] = ensemble_summary(res, cfg.experiment.realizations);
    run.write("dos.csv", [&](std::ostream& os) { write_dos_csv(os, res.dos); });
    return kExitOk;
  }
  const auto [lo, hi] = support_bounds(cfg.experiment.disorder.mu_b);
  const double center = 0.5 * (lo + hi);
  auto widths = cfg.sweep->b_widths;
  if (std::find(widths.begin(), widths.end(), 0.0) == widths.end()) widths.insert(widths.begin(), 0.0);
  json sweep = json::array();
  for (double w : widths) {
    ExperimentConfig ex = cfg.experiment;
    ex.disorder.mu_b = w == 0 ? DensitySpec::point(center) : DensitySpec::shifted_uniform(center, w);
    const auto tag = fmt::format("dos_w{:g}", w);
    const auto res = run.timed(tag, [&] { return run_ensemble(ex); });
    sweep.push_back({{"width", w}, {"file", tag + ".csv"}, {"realizations", ensemble_summary(res, ex.realizations)}});
    run.write(tag + ".csv", [&](std::ostream& os) { write_dos_csv(os, res.dos); });
  }
  run.summary["sweep"] = {{"b_center", center}, {"runs", sweep}};
  return kExitOk;
}

int cmd_wegner(Run& run) {
  const auto& cfg = run.config();
  WegnerBound bound;
  try {
    bound = certify_wegner(cfg.experiment, cfg.wegner.mode);
  } catch (const HypothesisError& e) {
    throw HypothesisError(fmt::format("refusing to run the Wegner check: {}", e.what()));
  }
  const auto res = run.timed("ensemble", [&] { return run_ensemble(cfg.experiment); });
  const auto report = wegner_check(res.dos, bound, cfg.wegner.min_count);
  run.summary["realizations"] = ensemble_summary(res, cfg.experiment.realizations);
  run.summary["wegner"] = {{"lower", bound.lower},
                           {"bv", bound.bv},
                           {"bins_checked", report.bins_checked},
                           {"violations", report.violations.size()}};
  run.write("wegner_report.json", [&](std::ostream& os) { write_wegner_json(os, report, res.dos); });
  run.write("dos.csv", [&](std::ostream& os) { write_dos_csv(os, res.dos); });
  run.say("wegner ({}): {} bins checked, {} violations", cfg.wegner.mode == WegnerBound::Mode::H ? "H" : "B",
          report.bins_checked, report.violations.size());
  return report.passed() ? kExitOk : kExitVerification;
}

int cmd_lifshits(Run& run) {
  const auto& cfg = run.config();
  LifshitsRun lr = cfg.lifshits;
  lr.alpha = cfg.lifshits_alpha();
  const auto table = run.timed("probe", [&] { return lifshits_probe(lr, cfg.experiment); });
  run.write("lifshits.csv", [&](std::ostream& os) { write_lifshits_csv(os, table); });
  json fit;
  try {
    const auto f = lifshits_exponent_fit(table);
    fit = {{"alpha_hat", f.alpha},     {"intercept", f.intercept}, {"jackknife_stderr", f.jackknife_stderr},
           {"band_lo", f.band_lo},     {"band_hi", f.band_hi},     {"points", f.points}};
    run.say("alpha_hat = {:.4f} +- {:.4f} from {} points", f.alpha, f.jackknife_stderr, f.points);
  } catch (const DomainError& e) {
    fit = {{"error", e.what()}};
    run.say("exponent fit unavailable: {}", e.what());
  }
  run.summary["lambda"] = table.lambda;
  run.summary["fit"] = fit;
  return kExitOk;
}

int cmd_dostransform(Run& run) {
  const auto& cfg = run.config();
  if (!cfg.dostransform) throw ConfigError("dostransform: missing section");
  const auto& s = *cfg.dostransform;

  DosTransform t{DensitySpec::uniform(0, 1), s.beta};
  if (s.source) {
    t.source = *s.source;
  } else {
    const auto& ex = cfg.experiment;
    std::vector<Spectrum> spectra(ex.realizations);
    run.timed("ensemble", [&] {
      parallel_for(ex.realizations, ex.threads, [&](std::size_t i) {
        const auto r = sample_realization(ex, i);
        auto res = eigvalsh(build_hamiltonian(ex, s.boundary, r.v));
        if (!res.report.converged) throw NumericalError(fmt::format("realization {} did not converge", i));
        spectra[i] = std::move(res.spectrum);
      });
    });
    std::vector<double> pooled;
    for (const auto& sp : spectra) pooled.insert(pooled.end(), sp.values.begin(), sp.values.end());
    t.source = make_histogram(pooled, ex.bin_width);
  }

  const auto grid = s.grid.values();
  std::vector<DosValue> vals(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) vals[g] = const_b_dos(t, grid[g]);
  std::size_t clipped = 0;
  run.write("dos_transform.csv", [&](std::ostream& os) {
    fmt::print(os,
               "# E [energy], D_H [1/energy, density of states of H at E], D_block [1/energy, transformed density, "
               "integrates to 2]; beta = {:.17g}; singular points |E| = |beta| carry the neighbouring finite value\n",
               s.beta);
    fmt::print(os, "E,D_H,D_block\n");
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double v = vals[g].value;
      if (vals[g].infinite) {
        ++clipped;
        // step away from zero to the first finite point
        const int dir = grid[g] < 0 ? -1 : 1;
        v = 0.0;
        for (auto k = static_cast<std::ptrdiff_t>(g) + dir; k >= 0 && k < static_cast<std::ptrdiff_t>(grid.size());
             k += dir)
          if (!vals[k].infinite) {
            v = vals[k].value;
            break;
          }
      }
      fmt::print(os, "{:.17g},{:.17g},{:.17g}\n", grid[g], source_density(t, grid[g]), v);
    }
  });
  run.summary["clipped_singular_points"] = clipped;
  return kExitOk;
}

int cmd_verify(Run& run, VerifyOptions opts) {
  if (run.seed)
    opts.seed = *run.seed;
  else if (run.cfg)
    opts.seed = run.cfg->experiment.seed.base_seed;
  opts.threads = run.threads;
  const auto report = run.timed("suites", [&] { return run_verify(opts); });
  for (const auto& s : report.suites) {
    fmt::print(run.out, "{:<20} {} ({} instances, worst normalized defect {:.3e})\n", s.name,
               s.passed() ? "PASS" : "FAIL", s.instances, s.worst);
    for (const auto& f : s.failures)
      fmt::print(run.out, "  replay with --replay {}: {}\n", f.instance_seed, f.detail);
    run.timings[s.name] = s.seconds;
  }
  run.write("verify_report.json", [&](std::ostream& os) { os << to_json(report, opts).dump(2) << '\n'; });
  run.summary["passed"] = report.passed();
  return report.passed() ? kExitOk : kExitVerification;
}

void write_manifest(Run& run, int status, const std::string& error, double total) {
  json outputs = json::array();
  for (const auto& p : run.written)
    if (fs::exists(p))
      outputs.push_back({{"file", p.filename().string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  run.timings["total"] = total;
  json m = {{"tool", "rbo"},
            {"version", RBO_VERSION},
            {"command", run.command},
            {"status", status},
            {"error", error.empty() ? json(nullptr) : json(error)},
            {"config_path", run.config_path ? json(*run.config_path) : json(nullptr)},
            {"config", run.cfg ? to_json(*run.cfg) : json(nullptr)},
            {"base_seed", run.cfg ? json(run.cfg->experiment.seed.base_seed) : run.seed ? json(*run.seed) : json(nullptr)},
            {"threads", run.threads == 0 ? default_threads() : run.threads},
            {"timings_s", run.timings},
            {"outputs", outputs},
            {"summary", run.summary}};
  fs::create_directories(run.out_dir);
  std::ofstream os(run.out_dir / "manifest.json");
  os << m.dump(2) << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random block operator experiments"};
  app.set_version_flag("--version", RBO_VERSION);
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = "rbo_out";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "base seed, overrides the config");
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  app.add_flag("--quiet", quiet, "only print errors and verify results");

  std::string scale = "default", fault = "none";
  std::uint64_t replay = 0;
  auto* verify = app.add_subcommand("verify", "exact identity suites at randomized small sizes");
  verify->add_option("--scale", scale, "small, default or large")->capture_default_str();
  verify->add_option("--inject-fault", fault, "none or negate-gamma")->capture_default_str();
  auto* replay_opt = verify->add_option("--replay", replay, "run one instance with this instance seed per suite");
  for (const char* name : {"ids", "dos", "gap", "wegner", "lifshits", "dostransform"}) app.add_subcommand(name);
  app.get_subcommand("ids")->description("integrated density of states on the energy grid");
  app.get_subcommand("dos")->description("density of states histogram (optionally a b-width sweep)");
  app.get_subcommand("gap")->description("per-realization min |E|");
  app.get_subcommand("wegner")->description("density of states against the Wegner bound");
  app.get_subcommand("lifshits")->description("ground-state tail probabilities and exponent fit");
  app.get_subcommand("dostransform")->description("constant-b density of states transform");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  Run run(app.get_subcommands().front()->get_name(), out, err);
  run.out_dir = out_dir;
  run.threads = threads;
  run.quiet = quiet;
  if (seed_opt->count()) run.seed = seed;

  Clock clock;
  int status = kExitOk;
  std::string error;
  try {
    if (!config_path.empty()) {
      run.config_path = config_path;
      run.cfg = load_config(config_path);
      if (run.seed) run.cfg->experiment.seed.base_seed = *run.seed;
      run.cfg->experiment.threads = threads;
    }
    if (run.command == "verify") {
      VerifyOptions opts;
      opts.scale = verify_scale_from_string(scale);
      opts.fault = fault_from_string(fault);
      if (replay_opt->count()) opts.replay = replay;
      status = cmd_verify(run, opts);
    } else if (run.command == "ids") {
      status = cmd_ids(run);
    } else if (run.command == "dos") {
      status = cmd_dos(run);
    } else if (run.command == "gap") {
      status = cmd_gap(run);
    } else if (run.command == "wegner") {
      status = cmd_wegner(run);
    } else if (run.command == "lifshits") {
      status = cmd_lifshits(run);
    } else {
      status = cmd_dostransform(run);
    }
  } catch (const ConfigError& e) {
    status = kExitConfig;
    error = fmt::format("configuration error: {}", e.what());
  } catch (const HypothesisError& e) {
    status = kExitConfig;
    error = e.what();
  } catch (const DomainError& e) {
    status = kExitConfig;
    error = fmt::format("invalid input: {}", e.what());
  } catch (const NumericalError& e) {
    status = kExitNumerical;
    error = fmt::format("numerical failure: {}", e.what());
  } catch (const std::exception& e) {
    status = kExitNumerical;
    error = fmt::format("failure: {}", e.what());
  }

  if (!error.empty()) {
    fmt::print(err, "rbo {}: {}\n", run.command, error);
    std::error_code ec;
    for (const auto& p : run.written) fs::remove(p, ec);
    run.written.clear();
  }
  try {
    write_manifest(run, status, error, clock.seconds());
  } catch (const std::exception& e) {
    fmt::print(err, "rbo {}: cannot write manifest: {}\n", run.command, e.what());
    if (status == kExitOk) status = kExitNumerical;
  }
  return status;
}

}  // namespace rbo
