#include "rbo/config.h"

#include <fstream>
#include <initializer_list>
#include <set>

#include <fmt/format.h>

namespace rbo {

using nlohmann::json;

namespace {

// Typed access to one JSON object with the dotted path kept for messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigError(fmt::format("{}: unknown key", at(k)));
  }

  bool has(const char* key) const { return j_.contains(key); }
  Node child(const char* key) const {
    require(key);
    return Node(j_[key], at(key));
  }
  const json& raw(const char* key) const {
    require(key);
    return j_[key];
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", at(key)));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(fmt::format("{}: must be finite", at(key)));
    return x;
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", at(key)));
    return v.get<std::int64_t>();
  }
  std::size_t count(const char* key, std::size_t min) const {
    const auto x = integer(key);
    if (x < static_cast<std::int64_t>(min)) throw ConfigError(fmt::format("{}: must be at least {}", at(key), min));
    return static_cast<std::size_t>(x);
  }
  std::size_t count(const char* key, std::size_t min, std::size_t fallback) const {
    return has(key) ? count(key, min) : fallback;
  }

  std::string string(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{}: expected a string", at(key)));
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", at(key)));
    return v.get<bool>();
  }

  std::vector<double> numbers(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", at(key)));
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(fmt::format("{}: expected an array of numbers", at(key)));
      out.push_back(x.get<double>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("{}: {}", path_.empty() ? "config" : path_, what));
  }

 private:
  void require(const char* key) const {
    if (!j_.contains(key)) throw ConfigError(fmt::format("{}: missing", at(key)));
  }

  const json& j_;
  std::string path_;
};

// Library validation messages lack the field path; prefix it.
template <class F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

EnergyGrid grid_from(const Node& n) {
  n.allow({"lo", "hi", "points"});
  EnergyGrid g{n.number("lo"), n.number("hi"), n.count("points", 1)};
  if (g.points > 1 && !(g.hi > g.lo)) n.fail("hi must exceed lo");
  return g;
}

json grid_to_json(const EnergyGrid& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"points", g.points}}; }

BoundaryMode mode_from(const std::string& s, const std::string& path) {
  if (s == "N") return BoundaryMode::Neumann;
  if (s == "D") return BoundaryMode::Dirichlet;
  throw ConfigError(fmt::format("{}: expected \"N\" or \"D\", got \"{}\"", path, s));
}

}  // namespace

double RunConfig::lifshits_alpha() const {
  return lifshits_alpha_set ? lifshits.alpha : 0.5 * experiment.cube.dim();
}

DensitySpec density_from_json(const json& j, const std::string& path) {
  Node n(j, path);
  const auto type = n.string("type");
  return with_path(path, [&]() -> DensitySpec {
    if (type == "uniform") {
      n.allow({"type", "lo", "hi"});
      return DensitySpec::uniform(n.number("lo"), n.number("hi"));
    }
    if (type == "shifted_uniform") {
      n.allow({"type", "center", "width"});
      const double w = n.number("width");
      if (!(w > 0)) throw ConfigError("width must be positive (use type \"point\" for a constant)");
      return DensitySpec::shifted_uniform(n.number("center"), w);
    }
    if (type == "piecewise") {
      n.allow({"type", "breakpoints", "heights"});
      return DensitySpec(PiecewiseConstant{n.numbers("breakpoints"), n.numbers("heights")});
    }
    if (type == "point") {
      n.allow({"type", "value"});
      return DensitySpec::point(n.number("value"));
    }
    throw ConfigError(fmt::format("type: unknown density type \"{}\" (uniform, shifted_uniform, piecewise, point)", type));
  });
}

json density_to_json(const DensitySpec& d) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Uniform>)
          return {{"type", "uniform"}, {"lo", v.lo}, {"hi", v.hi}};
        else if constexpr (std::is_same_v<T, PiecewiseConstant>)
          return {{"type", "piecewise"}, {"breakpoints", v.breakpoints}, {"heights", v.heights}};
        else
          return {{"type", "point"}, {"value", v.value}};
      },
      d.variant());
}

RunConfig parse_config(const json& doc) {
  Node root(doc, "");
  root.allow({"schema", "lattice", "boundary", "laplacian_sign", "disorder", "u0", "realizations", "grid",
              "histogram", "seed", "wegner", "lifshits", "dostransform", "sweep"});
  if (root.integer("schema") != kConfigSchema)
    throw ConfigError(fmt::format("schema: unsupported version {}, expected {}", root.raw("schema").dump(), kConfigSchema));

  RunConfig cfg;
  auto& ex = cfg.experiment;

  const auto lat = root.child("lattice");
  lat.allow({"dim", "side", "centered"});
  const auto dim = lat.integer("dim");
  if (dim < 1 || dim > 64) lat.fail("dim must be between 1 and 64");
  const auto side = lat.integer("side");
  if (side < 1) lat.fail("side must be at least 1");
  ex.cube = with_path("lattice", [&] { return Cube(static_cast<int>(dim), side, lat.boolean("centered", true)); });

  if (root.has("boundary"))
    ex.boundary = with_path("boundary", [&] { return restriction_from_string(root.string("boundary")); });
  if (root.has("laplacian_sign")) {
    const auto s = root.integer("laplacian_sign");
    if (s != 1 && s != -1) throw ConfigError("laplacian_sign: must be +1 or -1");
    ex.laplacian_sign = static_cast<int>(s);
  }

  const auto dis = root.child("disorder");
  dis.allow({"V", "b"});
  ex.disorder.mu_v = density_from_json(dis.raw("V"), "disorder.V");
  if (dis.has("b")) ex.disorder.mu_b = density_from_json(dis.raw("b"), "disorder.b");

  if (root.has("u0")) {
    const auto u = root.child("u0");
    u.allow({"period", "values"});
    std::vector<std::int64_t> period;
    for (double p : u.numbers("period")) {
      if (p != std::floor(p)) u.fail("period entries must be integers");
      period.push_back(static_cast<std::int64_t>(p));
    }
    ex.u0 = with_path("u0", [&] { return PeriodicPotential(period, u.numbers("values")); });
  }

  ex.realizations = root.count("realizations", 1, 1);
  if (root.has("grid")) ex.grid = grid_from(root.child("grid"));
  if (root.has("histogram")) {
    const auto h = root.child("histogram");
    h.allow({"bin_width"});
    if (h.has("bin_width")) {
      const double w = h.number("bin_width");
      if (!(w > 0)) h.fail("bin_width must be positive");
      ex.bin_width = w;
    }
  }
  if (root.has("seed")) {
    const auto& s = root.raw("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ConfigError("seed: expected a non-negative 64-bit integer");
    ex.seed.base_seed = s.get<std::uint64_t>();
  }

  if (root.has("wegner")) {
    const auto w = root.child("wegner");
    w.allow({"mode", "min_count"});
    if (w.has("mode")) {
      const auto m = w.string("mode");
      if (m == "H")
        cfg.wegner.mode = WegnerBound::Mode::H;
      else if (m == "B")
        cfg.wegner.mode = WegnerBound::Mode::B;
      else
        throw ConfigError(fmt::format("wegner.mode: expected \"H\" or \"B\", got \"{}\"", m));
    }
    cfg.wegner.min_count = w.count("min_count", 1, cfg.wegner.min_count);
  }

  if (root.has("lifshits")) {
    const auto l = root.child("lifshits");
    l.allow({"epsilons", "alpha", "c", "realizations"});
    if (l.has("epsilons")) {
      cfg.lifshits.epsilons = l.numbers("epsilons");
      if (cfg.lifshits.epsilons.empty()) l.fail("epsilons must not be empty");
      for (std::size_t i = 0; i < cfg.lifshits.epsilons.size(); ++i) {
        if (!(cfg.lifshits.epsilons[i] > 0)) throw ConfigError("lifshits.epsilons: entries must be positive");
        if (i > 0 && !(cfg.lifshits.epsilons[i] < cfg.lifshits.epsilons[i - 1]))
          throw ConfigError("lifshits.epsilons: must be strictly descending");
      }
    }
    if (l.has("alpha")) {
      cfg.lifshits.alpha = l.number("alpha");
      if (!(cfg.lifshits.alpha > 0)) l.fail("alpha must be positive");
      cfg.lifshits_alpha_set = true;
    }
    cfg.lifshits.c = l.number("c", cfg.lifshits.c);
    if (!(cfg.lifshits.c > 0)) l.fail("c must be positive");
    cfg.lifshits.realizations = l.count("realizations", 1, cfg.lifshits.realizations);
  }
  if (!cfg.lifshits_alpha_set) cfg.lifshits.alpha = 0.5 * ex.cube.dim();

  if (root.has("dostransform")) {
    const auto t = root.child("dostransform");
    t.allow({"beta", "source", "boundary", "grid"});
    DosTransformSettings s;
    s.beta = t.number("beta");
    if (s.beta == 0) t.fail("beta must be nonzero");
    if (t.has("source")) {
      const auto& src = t.raw("source");
      if (!(src.is_string() && src.get<std::string>() == "empirical"))
        s.source = density_from_json(src, "dostransform.source");
    }
    if (t.has("boundary")) s.boundary = mode_from(t.string("boundary"), "dostransform.boundary");
    if (t.has("grid")) s.grid = grid_from(t.child("grid"));
    cfg.dostransform = s;
  }

  if (root.has("sweep")) {
    const auto s = root.child("sweep");
    s.allow({"b_widths"});
    SweepSettings sw{s.numbers("b_widths")};
    if (sw.b_widths.empty()) s.fail("b_widths must not be empty");
    for (double w : sw.b_widths)
      if (!(w >= 0)) throw ConfigError("sweep.b_widths: entries must be non-negative");
    cfg.sweep = sw;
  }

  with_path("config", [&] {
    ex.validate();
    return 0;
  });
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: not valid JSON: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  const auto& ex = cfg.experiment;
  json j;
  j["schema"] = kConfigSchema;
  j["lattice"] = {{"dim", ex.cube.dim()}, {"side", ex.cube.side()}, {"centered", ex.cube.centered()}};
  j["boundary"] = to_string(ex.boundary);
  j["laplacian_sign"] = ex.laplacian_sign;
  j["disorder"] = {{"V", density_to_json(ex.disorder.mu_v)}, {"b", density_to_json(ex.disorder.mu_b)}};
  if (!ex.u0.empty()) j["u0"] = {{"period", ex.u0.period()}, {"values", ex.u0.values()}};
  j["realizations"] = ex.realizations;
  if (ex.grid) j["grid"] = grid_to_json(*ex.grid);
  if (ex.bin_width) j["histogram"] = {{"bin_width", *ex.bin_width}};
  j["seed"] = ex.seed.base_seed;
  j["wegner"] = {{"mode", cfg.wegner.mode == WegnerBound::Mode::H ? "H" : "B"}, {"min_count", cfg.wegner.min_count}};
  j["lifshits"] = {{"epsilons", cfg.lifshits.epsilons},
                   {"c", cfg.lifshits.c},
                   {"realizations", cfg.lifshits.realizations}};
  if (cfg.lifshits_alpha_set) j["lifshits"]["alpha"] = cfg.lifshits.alpha;
  if (cfg.dostransform) {
    const auto& t = *cfg.dostransform;
    j["dostransform"] = {{"beta", t.beta},
                         {"source", t.source ? density_to_json(*t.source) : json("empirical")},
                         {"boundary", t.boundary == BoundaryMode::Dirichlet ? "D" : "N"},
                         {"grid", grid_to_json(t.grid)}};
  }
  if (cfg.sweep) j["sweep"] = {{"b_widths", cfg.sweep->b_widths}};
  return j;
}

}  // namespace rbo
