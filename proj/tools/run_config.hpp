#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpar::cli {

/// Command parameters mirrored from the command line.
struct RunConfig {
  std::string command;
  std::string scene;
  std::string testbed;
  std::string eigenpair;
  std::string variant;
  std::string probe;
  std::optional<double> alpha;
  std::vector<double> alphas;
  std::optional<std::complex<double>> window_center;
  std::optional<double> window_radius;
  int count = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::optional<double> tol_eigen;
  std::optional<double> tol_alpha;
  std::optional<double> dead_band;
  double delta1 = 0.1;
  double delta2 = 0.1;
  std::vector<double> steps;
  int max_iterations = 300;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::ordered_json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

/// Parses "re,im" or a plain real number.
std::complex<double> parse_complex(const std::string& s);
/// Parses a comma-separated list of reals.
std::vector<double> parse_list(const std::string& s);

}  // namespace qpar::cli
