#include "cemfd/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <regex>

#include "cemfd/errors.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "domain.kind",          "domain.w1",          "domain.w2",
      "domain.w3",            "domain.r",           "control.U",
      "pattern.I",            "measurement.Ustar",  "params.beta",
      "params.R",             "params.sigma0",      "phantom.name",
      "phantom.background",   "phantom.center",     "phantom.radius",
      "phantom.amplitude",    "phantom.grid_h",     "grid.h",
      "grid.h_list",          "grid.h_ref",         "solver.tol",
      "optimizer.max_iters",  "optimizer.initial_step", "optimizer.shrink",
      "optimizer.sufficient_decrease", "optimizer.grad_tol", "optimizer.cost_tol",
      "optimizer.solver_tol", "optimizer.max_backtracks", "invert.data",
      "invert.refine",        "invert.noise",       "invert.init",
      "invert.init_sigma",    "study.checks",       "study.consistent_current",
      "seed"};
  return keys;
}

const std::regex& electrode_key() {
  static const std::regex re(R"(electrodes\[(\d+)\]\.(edge|a|b|a2|b2|Z))");
  return re;
}

Face parse_face(const std::string& edge, const DomainSpec& spec, const std::string& key) {
  static const std::map<std::string, Face> names{
      {"left", {0, false}}, {"right", {0, true}}, {"bottom", {1, false}}, {"top", {1, true}},
      {"x1-", {0, false}},  {"x1+", {0, true}},   {"x2-", {1, false}},    {"x2+", {1, true}},
      {"x3-", {2, false}},  {"x3+", {2, true}}};
  auto it = names.find(edge);
  if (it == names.end()) throw ConfigError(key + ": unknown edge '" + edge + "'");
  if (it->second.axis >= spec.dim()) throw ConfigError(key + ": face not present in 2D");
  if (spec.dim() == 3 && (edge == "left" || edge == "right" || edge == "bottom" || edge == "top")) {
    throw ConfigError(key + ": use x1-/x1+/x2-/x2+/x3-/x3+ for box faces");
  }
  return it->second;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string_view::npos) {
      section = std::string(trim(t.substr(1, t.size() - 2)));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (c.values_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    if (!known_keys().count(key) && !std::regex_match(key, electrode_key())) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    c.values_[key] = value;
    c.lines_[key] = lineno;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
  Config c = parse(is, path.string());
  c.base_dir_ = path.parent_path();
  return c;
}

const std::string& Config::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Config::number(const std::string& key) const {
  try {
    double v = parse_number(text(key));
    if (!std::isfinite(v)) throw InvalidArgument("not finite");
    return v;
  } catch (const InvalidArgument&) {
    throw ConfigError(key + ": expected a finite number, got '" + text(key) + "'");
  }
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Config::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  double v = number(key);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
  return static_cast<long>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::string s = text(key);
  for (char& ch : s) {
    if (ch == ',' || ch == '\t') ch = ' ';
  }
  std::vector<double> out;
  for (const auto& part : split(s, ' ')) {
    if (part.empty()) continue;
    try {
      out.push_back(parse_number(part));
    } catch (const InvalidArgument&) {
      throw ConfigError(key + ": '" + part + "' is not a number");
    }
  }
  return out;
}

ConductivityField RunConfig::field() const {
  if (phantom.rfind("fine-grid:", 0) == 0) {
    if (!(phantom_grid_h > 0.0)) throw ConfigError("phantom.grid_h is required for fine-grid phantoms");
    auto lat = Lattice::build(spec, electrodes, phantom_grid_h);
    std::ifstream is(phantom_path);
    if (!is) throw ConfigError("cannot open phantom grid '" + phantom_path.string() + "'");
    try {
      return ConductivityField::fine_grid(read_grid_function(is, lat));
    } catch (const Error& e) {
      throw ConfigError("phantom grid '" + phantom_path.string() + "': " + e.what());
    }
  }
  return ConductivityField::phantom(phantom, spec, phantom_background, bump);
}

RunConfig load_run_config(const Config& cfg) {
  RunConfig rc;
  const std::string kind = cfg.text("domain.kind");
  try {
    if (kind == "rect") {
      rc.spec = DomainSpec::rect(cfg.number("domain.w1"), cfg.number("domain.w2"));
    } else if (kind == "box") {
      rc.spec = DomainSpec::box(cfg.number("domain.w1"), cfg.number("domain.w2"),
                                cfg.number("domain.w3"));
    } else if (kind == "disk") {
      rc.spec = DomainSpec::disk(cfg.number("domain.r"));
    } else {
      throw ConfigError("domain.kind: expected rect, box or disk");
    }
    rc.spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }

  std::map<int, Electrode> found;
  std::smatch match;
  for (const auto& [key, value] : cfg.entries()) {
    if (!std::regex_match(key, match, electrode_key())) continue;
    int k = std::stoi(match[1].str());
    found[k];
  }
  int expected = 1;
  for (auto& [k, e] : found) {
    if (k != expected) throw ConfigError("electrodes must be numbered 1..m without gaps");
    ++expected;
    const std::string p = "electrodes[" + std::to_string(k) + "].";
    if (rc.spec.kind == DomainKind::Disk2D) {
      const std::string edge = cfg.text(p + "edge", "arc");
      if (edge != "arc") throw ConfigError(p + "edge: disk electrodes use 'arc'");
    } else {
      e.face = parse_face(cfg.text(p + "edge"), rc.spec, p + "edge");
    }
    e.a = cfg.number(p + "a");
    e.b = cfg.number(p + "b");
    if (rc.spec.dim() == 3) {
      e.a2 = cfg.number(p + "a2");
      e.b2 = cfg.number(p + "b2");
    }
    e.z = cfg.number(p + "Z");
    rc.electrodes.push_back(e);
  }
  if (rc.electrodes.empty()) throw ConfigError("no electrodes configured");
  try {
    validate_electrodes(rc.spec, rc.electrodes);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("electrodes: ") + e.what());
  }
  const auto m = rc.electrodes.size();

  rc.U = cfg.numbers("control.U");
  if (rc.U.size() != m) throw ConfigError("control.U must have one entry per electrode");
  if (cfg.has("pattern.I")) {
    rc.I = cfg.numbers("pattern.I");
    try {
      CurrentPattern{rc.I}.validate(static_cast<int>(m));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("pattern.I: ") + e.what());
    }
  }
  if (cfg.has("measurement.Ustar")) {
    rc.U_star = cfg.numbers("measurement.Ustar");
    try {
      Measurement{rc.U_star}.validate(static_cast<int>(m));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("measurement.Ustar: ") + e.what());
    }
  }

  rc.params.beta = cfg.number("params.beta", 1.0);
  rc.params.R = cfg.number("params.R", 100.0);
  rc.params.sigma0 = cfg.number("params.sigma0", 1.0);
  try {
    rc.params.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }

  rc.phantom = cfg.text("phantom.name", "constant");
  rc.phantom_background = cfg.number("phantom.background", 1.0);
  if (cfg.has("phantom.center")) {
    auto c = cfg.numbers("phantom.center");
    if (static_cast<int>(c.size()) != rc.spec.dim()) {
      throw ConfigError("phantom.center must have one coordinate per dimension");
    }
    for (std::size_t i = 0; i < c.size(); ++i) rc.bump.center[i] = c[i];
  } else if (rc.spec.kind == DomainKind::Disk2D) {
    rc.bump.center = {0.0, 0.0, 0.0};
  } else {
    for (int i = 0; i < rc.spec.dim(); ++i) {
      rc.bump.center[static_cast<std::size_t>(i)] = 0.5 * rc.spec.widths[static_cast<std::size_t>(i)];
    }
  }
  rc.bump.radius = cfg.number("phantom.radius", 0.2);
  rc.bump.amplitude = cfg.number("phantom.amplitude", 1.0);
  if (!(rc.bump.radius > 0.0)) throw ConfigError("phantom.radius must be positive");
  rc.phantom_grid_h = cfg.number("phantom.grid_h", 0.0);
  if (rc.phantom.rfind("fine-grid:", 0) == 0) {
    std::filesystem::path p = rc.phantom.substr(std::string("fine-grid:").size());
    rc.phantom_path = p.is_absolute() ? p : cfg.base_dir() / p;
    if (!std::filesystem::exists(rc.phantom_path)) {
      throw ConfigError("phantom grid file '" + rc.phantom_path.string() + "' does not exist");
    }
  } else if (rc.phantom != "constant" && rc.phantom != "bump" && rc.phantom != "two-bumps") {
    throw ConfigError("phantom.name: unknown phantom '" + rc.phantom + "'");
  }

  rc.h = cfg.number("grid.h", 0.0);
  if (cfg.has("grid.h_list")) rc.h_list = cfg.numbers("grid.h_list");
  if (rc.h == 0.0 && !rc.h_list.empty()) rc.h = rc.h_list.front();
  if (rc.h_list.empty() && rc.h > 0.0) rc.h_list = {rc.h};
  if (!(rc.h > 0.0)) throw ConfigError("grid.h (or grid.h_list) must be given and positive");
  for (double h : rc.h_list) {
    if (!(h > 0.0)) throw ConfigError("grid.h_list entries must be positive");
  }
  rc.h_ref = cfg.number("grid.h_ref", 0.0);
  if (rc.h_ref < 0.0) throw ConfigError("grid.h_ref must be positive");
  rc.solver_tol = cfg.number("solver.tol", 1e-10);
  if (!(rc.solver_tol > 0.0 && rc.solver_tol < 1.0)) throw ConfigError("solver.tol must be in (0,1)");

  OptimizerConfig& o = rc.optimizer;
  o.max_iters = static_cast<int>(cfg.integer("optimizer.max_iters", o.max_iters));
  o.initial_step = cfg.number("optimizer.initial_step", o.initial_step);
  o.shrink = cfg.number("optimizer.shrink", o.shrink);
  o.sufficient_decrease = cfg.number("optimizer.sufficient_decrease", o.sufficient_decrease);
  o.grad_tol = cfg.number("optimizer.grad_tol", o.grad_tol);
  o.cost_tol = cfg.number("optimizer.cost_tol", o.cost_tol);
  o.solver_tol = cfg.number("optimizer.solver_tol", o.solver_tol);
  o.max_backtracks = static_cast<int>(cfg.integer("optimizer.max_backtracks", o.max_backtracks));
  try {
    o.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  rc.invert_data = cfg.text("invert.data", "synthetic");
  if (rc.invert_data != "synthetic" && rc.invert_data != "given") {
    throw ConfigError("invert.data: expected synthetic or given");
  }
  rc.invert_refine = static_cast<int>(cfg.integer("invert.refine", 4));
  if (rc.invert_refine < 1) throw ConfigError("invert.refine must be at least 1");
  rc.invert_noise = cfg.number("invert.noise", 0.0);
  if (rc.invert_noise < 0.0) throw ConfigError("invert.noise must be nonnegative");
  rc.invert_init = cfg.text("invert.init", "constant");
  if (rc.invert_init != "constant" && rc.invert_init != "truth") {
    throw ConfigError("invert.init: expected constant or truth");
  }
  rc.invert_init_sigma = cfg.number("invert.init_sigma", 0.0);

  if (cfg.has("study.checks")) {
    std::string s = cfg.text("study.checks");
    for (char& ch : s) {
      if (ch == ',') ch = ' ';
    }
    for (const auto& part : split(s, ' ')) {
      if (part.empty()) continue;
      try {
        rc.checks.insert(parse_study_check(part));
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("study.checks: ") + e.what());
      }
    }
  } else {
    for (auto c : {StudyCheck::Energy, StudyCheck::SteklovLemma, StudyCheck::PmapNorm,
                   StudyCheck::WeakIdentity, StudyCheck::StateConvergence,
                   StudyCheck::FunctionalConvergence, StudyCheck::InterpEquivalence}) {
      rc.checks.insert(c);
    }
  }
  rc.consistent_current = cfg.flag("study.consistent_current", true);
  long seed = cfg.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  rc.seed = static_cast<std::uint64_t>(seed);
  return rc;
}

}  // namespace cemfd
