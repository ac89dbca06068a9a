#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvsel/decoder.hpp"
#include "mvsel/downstream.hpp"
#include "mvsel/ndcore.hpp"
#include "mvsel/pipeline.hpp"

namespace mvsel::io {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

// Numeric CSV with one header row. `source` names the input in error messages,
// which report 1-based line and column numbers.
Matrix parse_csv_matrix(std::string_view text, const std::string& source = "<csv>");
std::string format_csv_matrix(const Matrix& m, const std::string& column_prefix = "v");
Matrix read_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const Matrix& m, const std::string& column_prefix = "v");

// Single "label" column of integers.
std::vector<int> parse_labels(std::string_view text, const std::string& source = "<labels>");
std::string format_labels(const std::vector<int>& labels);
std::vector<int> read_labels(const fs::path& path);
void write_labels(const fs::path& path, const std::vector<int>& labels);

// One 0-based index per line; '#' starts a comment. A "# variables <p>" line
// records the dimension of the view the indices refer to.
struct IndexList {
  std::vector<Index> indices;
  std::optional<Index> num_variables;
};
IndexList parse_index_list(std::string_view text, const std::string& source = "<indices>");
std::string format_index_list(const std::vector<Index>& indices, std::optional<Index> num_variables = std::nullopt);
IndexList read_index_list(const fs::path& path);
void write_index_list(const fs::path& path, const std::vector<Index>& indices,
                      std::optional<Index> num_variables = std::nullopt);

void write_loss_trace(const fs::path& path, const std::vector<double>& trace);

// JSON encodings. Every *_from_json rejects unknown keys and wrong types.
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(std::string_view text, const TrainConfig& base = {});
TrainConfig read_config(const fs::path& path);

SearchSpace space_from_json(std::string_view text);
SearchSpace read_space(const fs::path& path);

struct Checkpoint {
  int stage = 1;
  TrainConfig config;
  std::vector<DecoderNetwork> networks;
  Matrix latent;
  std::vector<ColumnStats<double>> standardization;  // fitted on the full training views
  std::vector<Index> view_dims;                      // column counts before any selection
  std::optional<std::vector<std::vector<Index>>> selection;
  bool converged = false;
  int iterations_run = 0;
};

inline constexpr int kCheckpointFormatVersion = 1;

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text);
void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const fs::path& path);

std::string svm_to_json(const SvmModel& model);
SvmModel svm_from_json(std::string_view text);
void write_svm(const fs::path& path, const SvmModel& model);
SvmModel read_svm(const fs::path& path);

// FNV-1a 64 over the file bytes, as 16 lowercase hex digits.
std::string file_digest(const fs::path& path);
std::string hex64(std::uint64_t v);

}  // namespace mvsel::io
