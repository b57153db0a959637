#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemfd/control_space.hpp"
#include "cemfd/convergence.hpp"
#include "cemfd/geometry.hpp"
#include "cemfd/inverse.hpp"

namespace cemfd {

// Flat `key = value` file. `#` starts a comment; a `[name]` line prefixes the
// following keys with `name.` until the next header.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  // Comma and/or whitespace separated list.
  std::vector<double> numbers(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_;
  std::filesystem::path base_dir_;
};

struct RunConfig {
  DomainSpec spec;
  std::vector<Electrode> electrodes;
  std::vector<double> U;
  std::vector<double> I;        // empty when absent
  std::vector<double> U_star;   // empty when absent
  AdmissibilityParams params;

  std::string phantom = "constant";
  double phantom_background = 1.0;
  Bump bump;
  double phantom_grid_h = 0.0;
  std::filesystem::path phantom_path;

  double h = 0.0;
  std::vector<double> h_list;
  double h_ref = 0.0;
  double solver_tol = 1e-10;

  OptimizerConfig optimizer;
  std::string invert_data = "synthetic";  // or "given"
  int invert_refine = 4;
  double invert_noise = 0.0;
  std::string invert_init = "constant";  // or "truth"
  double invert_init_sigma = 0.0;        // 0 selects params.sigma0

  std::set<StudyCheck> checks;
  bool consistent_current = true;
  std::uint64_t seed = 0;

  ConductivityField field() const;
};

// Builds and validates the run configuration. Throws ConfigError naming the
// offending key.
RunConfig load_run_config(const Config& cfg);

}  // namespace cemfd
