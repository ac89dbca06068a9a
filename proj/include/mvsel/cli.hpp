#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvsel/ndcore.hpp"

namespace mvsel::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

// Scenarios: nonlinear, linear, scale_free, lattice, cluster.
struct SimulateOptions {
  std::string scenario = "nonlinear";
  Index n1 = 200, n2 = 150;  // class sizes (nonlinear and graph scenarios)
  Index p1 = 500, p2 = 500;
  Index n_per_class = 180;   // linear scenario
  double rho1 = 0.9, rho2 = 0.7, c = 0.5;
  // A held-out draw is written under <out_dir>/test when either size is positive.
  // For the linear scenario test_n1 is the per-class size.
  Index test_n1 = 0, test_n2 = 0;
  std::uint64_t seed = 1;
  fs::path out_dir = ".";
};

struct TrainOptions {
  std::vector<fs::path> views;
  std::optional<fs::path> config;
  std::vector<fs::path> graphs;  // one edge list per view; enables Laplacian smoothing
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
};

struct RankOptions {
  fs::path checkpoint;
  std::optional<double> r_fraction;
  std::vector<Index> top;  // explicit column count per view, instead of a fraction
  fs::path out_dir = ".";
};

struct RefitOptions {
  std::vector<fs::path> views;
  fs::path checkpoint;              // stage 1, for standardization and the base config
  std::vector<fs::path> selections;
  std::optional<fs::path> config;
  std::optional<fs::path> labels;   // when given, an SVM is fitted on the stage-2 latent code
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
};

struct PredictOptions {
  std::vector<fs::path> views;
  fs::path checkpoint;  // stage 2
  std::optional<fs::path> classifier;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
};

struct EvaluateOptions {
  std::optional<fs::path> predictions;
  std::optional<fs::path> actual;
  std::vector<fs::path> selections;
  std::vector<fs::path> truths;
  std::vector<Index> num_variables;  // used when a truth file lacks a "# variables" line
  fs::path out_dir = ".";
};

struct HypersearchOptions {
  std::vector<fs::path> views;
  fs::path labels;
  fs::path space;
  std::optional<fs::path> config;
  std::size_t n_draws = 10;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0 = available cores
  fs::path out_dir = ".";
};

void cmd_simulate(const SimulateOptions& opts);
void cmd_train(const TrainOptions& opts);
void cmd_rank(const RankOptions& opts);
void cmd_refit(const RefitOptions& opts);
void cmd_predict(const PredictOptions& opts);
void cmd_evaluate(const EvaluateOptions& opts);
void cmd_hypersearch(const HypersearchOptions& opts);

// Percentage of a fraction, rounded half-up to two decimals ("33.33").
std::string format_percent(double fraction);

// Parses and dispatches; returns the process exit code. Failures print one line to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace mvsel::cli
