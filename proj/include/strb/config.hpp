#pragma once

#include "strb/types.hpp"

#include <optional>
#include <vector>

namespace strb {

struct OnlineConfig {
  std::vector<Mu> mu;       // explicit evaluation points; empty = n_test random
  bool compare_hf = false;  // also time one truth solve and report the speedup
};

struct SweepConfig {
  int mu1_points = 10;
  std::vector<double> alphas{1.0, 0.1, 0.01, 0.001};
  std::optional<double> mu2, mu3;  // default: box midpoint
};

struct HfConfig {
  std::optional<Mu> mu;  // default: box midpoint
  bool export_csv = false;
};

// One JSON document drives every subcommand.  Unknown keys are rejected so
// that typos fail loudly (exit code 2).
struct RunConfig {
  std::string problem = "graetz_distributed";
  std::string mode = "unsteady";
  int nx = 10, ny = 10;
  double T = 5.0;
  int n_t = 30;
  double alpha = 0.01;
  std::optional<std::string> bound_case;  // default chosen per problem
  double tol = 1e-4;
  int max_iters = 40;
  int n_train = 225;
  int n_test = 0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool exact_eta = false;
  bool mesh_dump = false;
  bool extrapolate_mu = false;
  OnlineConfig online;
  SweepConfig sweep;
  HfConfig hf;
};

RunConfig parse_config_json(const std::string& text);
RunConfig parse_config_file(const std::string& path);
std::string config_to_json(const RunConfig& c);  // canonical (sorted keys)
void validate_config(const RunConfig& c);

}  // namespace strb
