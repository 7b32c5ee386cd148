#pragma once

#include "astr/astr.hpp"
#include "astr/baselines.hpp"
#include "astr/data.hpp"
#include "astr/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace astr {

// Reference optimum: full-batch trust region until F stops improving at
// floating-point resolution.
struct FStarResult {
  double value = kNaN;       // best F seen
  long long iterations = 0;
  double egrads = 0.0;       // spent by this call (0 on a cache hit)
  bool hit_iteration_cap = false;
  bool from_cache = false;
  RunStatus status = RunStatus::budget_exhausted;
};

inline constexpr long long kFStarIterationCap = 10000;

// x0 defaults to zero. Results are cached per process, keyed by the problem
// fingerprint, the configuration, x0 and the cap.
FStarResult compute_f_star(const FiniteSumObjective& problem, const FullBatchTrConfig& cfg = {},
                           const Vector& x0 = {}, long long max_iterations = kFStarIterationCap);
void clear_f_star_cache();

// Named datasets found under a data directory.
struct DatasetEntry {
  std::string name;
  std::string files;
  std::string source;
};
const std::vector<DatasetEntry>& dataset_catalog();

std::optional<std::filesystem::path> data_dir_from_env();  // $ASTR_DATA_DIR

// synth:n=N,d=D[,seed=S][,test=F]
struct SynthSpec {
  Index n = 0;
  Index d = 0;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
};
SynthSpec parse_synth_spec(std::string_view spec);

// A catalog name, a synth: spec or a LIBSVM file path. Sources without a
// test part get a random 10% test split drawn with split_seed.
Dataset resolve_dataset(std::string_view spec, const std::optional<std::filesystem::path>& data_dir,
                        std::uint64_t split_seed = 0);

// Objective over the given rows; kind is logistic, nls or nn.
std::unique_ptr<FiniteSumObjective> make_problem(std::string_view kind, const Dataset& data, IndexSpan rows);

// Small normal perturbation of zero, N(0, scale^2) per coordinate.
Vector initial_point(Index dim, std::uint64_t seed, double scale = 0.01);

struct ExperimentOptions {
  std::string problem = "logistic";
  std::string dataset;
  std::string method = "astr";  // astr | tr | sgd | svrg | grid:sgd | grid:svrg
  double budget_egrads = kInf;
  double budget_seconds = kInf;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> data_dir;

  CurvatureMode curvature = CurvatureMode::subsampled_hessian;
  double theta = 0.5;
  double omega = 2.0;
  double s0_fraction = 0.01;
  double hessian_fraction = 0.1;
  double epsilon = 1e-14;

  double step_size = 1e-2;
  double batch_fraction = 1e-2;
  double inner_fraction = 1.0;

  int threads = 1;
  int jobs = 1;
  bool scale = false;
  std::optional<Index> subsample;
  std::uint64_t split_seed = 0;
  std::uint64_t x0_seed = 0;
  bool skip_f_star = false;
};

extern const std::vector<std::string> kProblemNames;
extern const std::vector<std::string> kMethodNames;

void print_catalog(std::ostream& out);

// Runs the requested method for every seed and writes
//   <out>/<method>_seed<k>.csv per run, or one CSV per cell for a grid plus
//   <out>/grid_<m>_summary.csv ranked by final F,
//   <out>/manifest.json.
// Throws ContractError on bad options; I/O failures propagate.
void run_experiment(const ExperimentOptions& options, std::ostream& progress);

}  // namespace astr
