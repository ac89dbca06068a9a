#include "mvsel/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvsel/rng.hpp"

namespace mvsel::io {

using nlohmann::json;

// ------------------------------------------------------------------ files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading " + path.string());
  return text;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("error while writing " + path.string());
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw IoError("format_double: conversion failed");
  return std::string(buf, end);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

std::string file_digest(const fs::path& path) { return hex64(Rng::fnv1a64(read_text(path))); }

// -------------------------------------------------------------------- text

namespace {

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0, number = 1;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({number++, line});
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string location(const std::string& source, std::size_t line) {
  return source + ": line " + std::to_string(line);
}

}  // namespace

Matrix parse_csv_matrix(std::string_view text, const std::string& source) {
  std::vector<Line> rows;
  for (const Line& l : split_lines(text))
    if (!trim(l.text).empty()) rows.push_back(l);
  if (rows.empty()) throw IoError(source + ": missing header row");
  const std::size_t width = split_fields(rows.front().text).size();
  Matrix m(static_cast<Index>(rows.size() - 1), static_cast<Index>(width));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto fields = split_fields(rows[r].text);
    if (fields.size() != width)
      throw IoError(location(source, rows[r].number) + ": expected " + std::to_string(width) + " fields, found " +
                    std::to_string(fields.size()));
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v) || !std::isfinite(v))
        throw IoError(location(source, rows[r].number) + ", column " + std::to_string(c + 1) +
                      ": non-numeric cell '" + std::string(fields[c]) + "'");
      m(static_cast<Index>(r - 1), static_cast<Index>(c)) = v;
    }
  }
  return m;
}

std::string format_csv_matrix(const Matrix& m, const std::string& column_prefix) {
  std::string out;
  for (Index j = 0; j < m.cols(); ++j) {
    if (j) out += ',';
    out += column_prefix + std::to_string(j);
  }
  out += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix read_matrix_csv(const fs::path& path) { return parse_csv_matrix(read_text(path), path.string()); }

void write_matrix_csv(const fs::path& path, const Matrix& m, const std::string& column_prefix) {
  write_text(path, format_csv_matrix(m, column_prefix));
}

std::vector<int> parse_labels(std::string_view text, const std::string& source) {
  std::vector<int> labels;
  bool header = true;
  for (const Line& l : split_lines(text)) {
    const std::string_view t = trim(l.text);
    if (t.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    if (t.find(',') != std::string_view::npos)
      throw IoError(location(source, l.number) + ": expected a single label column");
    int v = 0;
    if (!parse_number(t, v)) throw IoError(location(source, l.number) + ", column 1: non-integer label '" +
                                           std::string(t) + "'");
    labels.push_back(v);
  }
  if (header) throw IoError(source + ": missing header row");
  return labels;
}

std::string format_labels(const std::vector<int>& labels) {
  std::string out = "label\n";
  for (int v : labels) out += std::to_string(v) + '\n';
  return out;
}

std::vector<int> read_labels(const fs::path& path) { return parse_labels(read_text(path), path.string()); }
void write_labels(const fs::path& path, const std::vector<int>& labels) { write_text(path, format_labels(labels)); }

IndexList parse_index_list(std::string_view text, const std::string& source) {
  IndexList out;
  for (const Line& l : split_lines(text)) {
    std::string_view t = trim(l.text);
    if (t.empty()) continue;
    if (t.front() == '#') {
      t = trim(t.substr(1));
      constexpr std::string_view key = "variables";
      if (t.substr(0, key.size()) == key) {
        Index p = 0;
        if (!parse_number(trim(t.substr(key.size())), p) || p < 1)
          throw IoError(location(source, l.number) + ": malformed variable count");
        out.num_variables = p;
      }
      continue;
    }
    Index v = 0;
    if (!parse_number(t, v) || v < 0)
      throw IoError(location(source, l.number) + ": expected a non-negative index, found '" + std::string(t) + "'");
    out.indices.push_back(v);
  }
  if (out.num_variables)
    for (Index v : out.indices)
      if (v >= *out.num_variables)
        throw IoError(source + ": index " + std::to_string(v) + " is out of range for " +
                      std::to_string(*out.num_variables) + " variables");
  return out;
}

std::string format_index_list(const std::vector<Index>& indices, std::optional<Index> num_variables) {
  std::string out;
  if (num_variables) out += "# variables " + std::to_string(*num_variables) + '\n';
  for (Index v : indices) out += std::to_string(v) + '\n';
  return out;
}

IndexList read_index_list(const fs::path& path) { return parse_index_list(read_text(path), path.string()); }

void write_index_list(const fs::path& path, const std::vector<Index>& indices, std::optional<Index> num_variables) {
  write_text(path, format_index_list(indices, num_variables));
}

void write_loss_trace(const fs::path& path, const std::vector<double>& trace) {
  std::string out = "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i) + ',' + format_double(trace[i]) + '\n';
  write_text(path, out);
}

// -------------------------------------------------------------------- json

namespace {

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(what + ": invalid JSON (" + e.what() + ")");
  }
}

void require_object(const json& j, const std::string& what, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw IoError(what + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw IoError(what + ": unknown key '" + key + "'");
}

const json& field(const json& j, const std::string& key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw IoError(what + ": missing key '" + key + "'");
  return *it;
}

double as_double(const json& j, const std::string& what) {
  if (!j.is_number()) throw IoError(what + ": expected a number");
  return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& what) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  throw IoError(what + ": expected an integer");
}

bool as_bool(const json& j, const std::string& what) {
  if (!j.is_boolean()) throw IoError(what + ": expected true or false");
  return j.get<bool>();
}

// A scalar or an array of numbers.
std::vector<double> as_double_list(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) throw IoError(what + ": expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(as_double(v, what));
  return out;
}

std::vector<Index> as_index_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array of integers");
  std::vector<Index> out;
  for (const auto& v : j) out.push_back(static_cast<Index>(as_int(v, what)));
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Derived>
json vector_to_json(const Eigen::DenseBase<Derived>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, Index rows, Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw IoError(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw IoError(what + ": row " + std::to_string(i) + " should have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) m(i, c) = as_double(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

// Rows of equal length; an empty array gives a 0 x 0 matrix.
Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array of rows");
  if (j.empty()) return Matrix(0, 0);
  if (!j.front().is_array()) throw IoError(what + ": expected an array of rows");
  return matrix_from_json(j, static_cast<Index>(j.size()), static_cast<Index>(j.front().size()), what);
}

RowVector row_from_json(const json& j, Index size, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != size)
    throw IoError(what + ": expected " + std::to_string(size) + " entries");
  RowVector v(size);
  for (Index i = 0; i < size; ++i) v(i) = as_double(j[static_cast<std::size_t>(i)], what);
  return v;
}

json config_json(const TrainConfig& cfg) {
  json j;
  j["K"] = cfg.K;
  j["hidden_widths"] = cfg.hidden_widths;
  j["lambdas"] = cfg.lambdas;
  j["lr_net"] = cfg.lr_net;
  j["lr_z"] = cfg.lr_z;
  j["max_iters"] = cfg.max_iters;
  j["rel_tol"] = cfg.rel_tol;
  j["r_fraction"] = cfg.r_fraction;
  j["seed"] = cfg.seed;
  j["use_laplacian"] = cfg.use_laplacian;
  j["group_norm"] = cfg.group_norm;
  j["svm_c"] = cfg.svm_c;
  j["svm_gamma"] = cfg.svm_gamma ? json(*cfg.svm_gamma) : json(nullptr);
  return j;
}

TrainConfig config_from(const json& j, const TrainConfig& base, const std::string& what) {
  require_object(j, what,
                 {"K", "hidden_widths", "lambdas", "lr_net", "lr_z", "max_iters", "rel_tol", "r_fraction", "seed",
                  "use_laplacian", "group_norm", "svm_c", "svm_gamma"});
  TrainConfig cfg = base;
  auto ctx = [&](const char* key) { return what + ": " + key; };
  if (j.contains("K")) {
    cfg.K = static_cast<Index>(as_int(j["K"], ctx("K")));
    if (cfg.K < 1) throw IoError(ctx("K") + " must be at least 1");
  }
  if (j.contains("hidden_widths")) {
    const json& h = j["hidden_widths"];
    if (!h.is_array()) throw IoError(ctx("hidden_widths") + ": expected an array");
    cfg.hidden_widths.clear();
    if (h.empty() || h.front().is_number()) {
      cfg.hidden_widths.push_back(as_index_list(h, ctx("hidden_widths")));
    } else {
      for (const auto& item : h) cfg.hidden_widths.push_back(as_index_list(item, ctx("hidden_widths")));
    }
    for (const auto& list : cfg.hidden_widths)
      for (Index w : list)
        if (w < 1) throw IoError(ctx("hidden_widths") + ": widths must be positive");
  }
  if (j.contains("lambdas")) cfg.lambdas = as_double_list(j["lambdas"], ctx("lambdas"));
  if (j.contains("lr_net")) cfg.lr_net = as_double_list(j["lr_net"], ctx("lr_net"));
  if (j.contains("lr_z")) cfg.lr_z = as_double(j["lr_z"], ctx("lr_z"));
  if (j.contains("max_iters")) cfg.max_iters = static_cast<int>(as_int(j["max_iters"], ctx("max_iters")));
  if (j.contains("rel_tol")) cfg.rel_tol = as_double(j["rel_tol"], ctx("rel_tol"));
  if (j.contains("r_fraction")) cfg.r_fraction = as_double(j["r_fraction"], ctx("r_fraction"));
  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (s.is_number_unsigned()) cfg.seed = s.get<std::uint64_t>();
    else cfg.seed = static_cast<std::uint64_t>(as_int(s, ctx("seed")));
  }
  if (j.contains("use_laplacian")) cfg.use_laplacian = as_bool(j["use_laplacian"], ctx("use_laplacian"));
  if (j.contains("group_norm")) cfg.group_norm = as_bool(j["group_norm"], ctx("group_norm"));
  if (j.contains("svm_c")) cfg.svm_c = as_double(j["svm_c"], ctx("svm_c"));
  if (j.contains("svm_gamma")) {
    if (j["svm_gamma"].is_null()) cfg.svm_gamma.reset();
    else cfg.svm_gamma = as_double(j["svm_gamma"], ctx("svm_gamma"));
  }
  for (double v : cfg.lambdas)
    if (!(v >= 0)) throw IoError(ctx("lambdas") + ": values must be non-negative");
  for (double v : cfg.lr_net)
    if (!(v > 0)) throw IoError(ctx("lr_net") + ": values must be positive");
  if (!(cfg.lr_z > 0)) throw IoError(ctx("lr_z") + " must be positive");
  if (cfg.max_iters < 0) throw IoError(ctx("max_iters") + " must be non-negative");
  if (!(cfg.rel_tol >= 0)) throw IoError(ctx("rel_tol") + " must be non-negative");
  if (!(cfg.r_fraction > 0 && cfg.r_fraction <= 1)) throw IoError(ctx("r_fraction") + " must lie in (0, 1]");
  if (!(cfg.svm_c > 0)) throw IoError(ctx("svm_c") + " must be positive");
  if (cfg.svm_gamma && !(*cfg.svm_gamma > 0)) throw IoError(ctx("svm_gamma") + " must be positive");
  return cfg;
}

std::string activation_name(Activation a) { return a == Activation::elu ? "elu" : "identity"; }

Activation parse_activation(const json& j, const std::string& what) {
  if (j == "elu") return Activation::elu;
  if (j == "identity") return Activation::identity;
  throw IoError(what + ": unknown activation");
}

json network_json(const DecoderNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl;
    jl["in_width"] = l.spec.in_width;
    jl["out_width"] = l.spec.out_width;
    jl["activation"] = activation_name(l.spec.activation);
    jl["group_norm"] = l.spec.group_norm;
    jl["W"] = matrix_to_json(l.W);
    jl["b"] = vector_to_json(l.b);
    if (l.spec.group_norm) {
      jl["gamma"] = vector_to_json(l.gamma);
      jl["beta"] = vector_to_json(l.beta);
    }
    layers.push_back(std::move(jl));
  }
  json j;
  j["view_id"] = net.view_id;
  j["layers"] = std::move(layers);
  return j;
}

DecoderNetwork network_from(const json& j, const std::string& what) {
  require_object(j, what, {"view_id", "layers"});
  DecoderNetwork net;
  net.view_id = static_cast<int>(as_int(field(j, "view_id", what), what + ": view_id"));
  const json& layers = field(j, "layers", what);
  if (!layers.is_array() || layers.empty()) throw IoError(what + ": layers must be a non-empty array");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string lw = what + ": layer " + std::to_string(k);
    const json& jl = layers[k];
    require_object(jl, lw, {"in_width", "out_width", "activation", "group_norm", "W", "b", "gamma", "beta"});
    Layer<double> layer;
    layer.spec.in_width = static_cast<Index>(as_int(field(jl, "in_width", lw), lw));
    layer.spec.out_width = static_cast<Index>(as_int(field(jl, "out_width", lw), lw));
    layer.spec.activation = parse_activation(field(jl, "activation", lw), lw);
    layer.spec.group_norm = as_bool(field(jl, "group_norm", lw), lw);
    if (layer.spec.in_width < 1 || layer.spec.out_width < 1) throw IoError(lw + ": widths must be positive");
    layer.W = matrix_from_json(field(jl, "W", lw), layer.spec.in_width, layer.spec.out_width, lw + " W");
    layer.b = row_from_json(field(jl, "b", lw), layer.spec.out_width, lw + " b");
    if (layer.spec.group_norm) {
      layer.gamma = row_from_json(field(jl, "gamma", lw), layer.spec.out_width, lw + " gamma");
      layer.beta = row_from_json(field(jl, "beta", lw), layer.spec.out_width, lw + " beta");
    }
    net.layers.push_back(std::move(layer));
  }
  try {
    validate_architecture(net.architecture());
  } catch (const std::invalid_argument& e) {
    throw IoError(what + ": " + e.what());
  }
  return net;
}

}  // namespace

std::string config_to_json(const TrainConfig& cfg) { return config_json(cfg).dump(2) + '\n'; }

TrainConfig config_from_json(std::string_view text, const TrainConfig& base) {
  return config_from(parse_json(text, "config"), base, "config");
}

TrainConfig read_config(const fs::path& path) {
  return config_from(parse_json(read_text(path), path.string()), TrainConfig{}, path.string());
}

SearchSpace space_from_json(std::string_view text) {
  static const std::set<std::string> keys = {"K",        "lambda",     "lr_net", "lr_z",
                                             "max_iters", "r_fraction", "svm_c",  "svm_gamma"};
  const json j = parse_json(text, "space");
  require_object(j, "space", keys);
  SearchSpace space;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array() || value.empty()) throw IoError("space: '" + key + "' must be a non-empty array");
    for (const auto& v : value) space[key].push_back(as_double(v, "space: " + key));
  }
  if (space.empty()) throw IoError("space: no parameters to search");
  return space;
}

SearchSpace read_space(const fs::path& path) {
  try {
    return space_from_json(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["stage"] = ckpt.stage;
  j["config"] = config_json(ckpt.config);
  j["view_dims"] = ckpt.view_dims;
  json stats = json::array();
  for (const auto& s : ckpt.standardization) stats.push_back({{"mean", vector_to_json(s.mean)}, {"sd", vector_to_json(s.sd)}});
  j["standardization"] = std::move(stats);
  j["selection"] = ckpt.selection ? json(*ckpt.selection) : json(nullptr);
  json nets = json::array();
  for (const auto& n : ckpt.networks) nets.push_back(network_json(n));
  j["networks"] = std::move(nets);
  j["latent"] = matrix_to_json(ckpt.latent);
  j["converged"] = ckpt.converged;
  j["iterations_run"] = ckpt.iterations_run;
  return j.dump() + '\n';
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const std::string what = "checkpoint";
  const json j = parse_json(text, what);
  require_object(j, what,
                 {"format_version", "stage", "config", "view_dims", "standardization", "selection", "networks",
                  "latent", "converged", "iterations_run"});
  const auto version = as_int(field(j, "format_version", what), what + ": format_version");
  if (version != kCheckpointFormatVersion)
    throw IoError(what + ": unsupported format_version " + std::to_string(version));
  Checkpoint c;
  c.stage = static_cast<int>(as_int(field(j, "stage", what), what + ": stage"));
  if (c.stage < 1 || c.stage > 3) throw IoError(what + ": stage must be 1, 2 or 3");
  c.config = config_from(field(j, "config", what), TrainConfig{}, what + ": config");
  c.view_dims = as_index_list(field(j, "view_dims", what), what + ": view_dims");
  const json& stats = field(j, "standardization", what);
  if (!stats.is_array() || stats.size() != c.view_dims.size())
    throw IoError(what + ": standardization must have one entry per view");
  for (std::size_t d = 0; d < stats.size(); ++d) {
    const std::string sw = what + ": standardization " + std::to_string(d);
    require_object(stats[d], sw, {"mean", "sd"});
    ColumnStats<double> s;
    s.mean = row_from_json(field(stats[d], "mean", sw), c.view_dims[d], sw + " mean");
    s.sd = row_from_json(field(stats[d], "sd", sw), c.view_dims[d], sw + " sd");
    c.standardization.push_back(std::move(s));
  }
  const json& sel = field(j, "selection", what);
  if (!sel.is_null()) {
    if (!sel.is_array() || sel.size() != c.view_dims.size())
      throw IoError(what + ": selection must have one list per view");
    std::vector<std::vector<Index>> lists;
    for (std::size_t d = 0; d < sel.size(); ++d) {
      lists.push_back(as_index_list(sel[d], what + ": selection"));
      for (Index v : lists.back())
        if (v < 0 || v >= c.view_dims[d]) throw IoError(what + ": selection index out of range");
    }
    c.selection = std::move(lists);
  }
  const json& nets = field(j, "networks", what);
  if (!nets.is_array() || nets.size() != c.view_dims.size())
    throw IoError(what + ": networks must have one entry per view");
  for (std::size_t d = 0; d < nets.size(); ++d)
    c.networks.push_back(network_from(nets[d], what + ": network " + std::to_string(d)));
  c.latent = matrix_from_json(field(j, "latent", what), what + ": latent");
  c.converged = as_bool(field(j, "converged", what), what + ": converged");
  c.iterations_run = static_cast<int>(as_int(field(j, "iterations_run", what), what + ": iterations_run"));
  for (std::size_t d = 0; d < c.networks.size(); ++d) {
    const Index expected_out = c.selection ? static_cast<Index>((*c.selection)[d].size()) : c.view_dims[d];
    if (c.networks[d].output_width() != expected_out)
      throw IoError(what + ": network " + std::to_string(d) + " output width does not match its view");
    if (c.latent.size() > 0 && c.networks[d].input_width() != c.latent.cols())
      throw IoError(what + ": network " + std::to_string(d) + " input width does not match the latent code");
  }
  return c;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) { write_text(path, checkpoint_to_json(ckpt)); }

Checkpoint read_checkpoint(const fs::path& path) {
  try {
    return checkpoint_from_json(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string svm_to_json(const SvmModel& model) {
  json j;
  j["C"] = model.C;
  j["gamma"] = model.gamma;
  j["tol"] = model.tol;
  j["classes"] = model.classes;
  j["num_features"] = model.num_features;
  json subs = json::array();
  for (const auto& s : model.submodels) {
    json js;
    js["positive_class"] = s.positive_class;
    js["bias"] = s.bias;
    js["support"] = matrix_to_json(s.support);
    js["coef"] = vector_to_json(s.coef);
    js["iterations"] = s.iterations;
    js["final_gap"] = s.final_gap;
    subs.push_back(std::move(js));
  }
  j["submodels"] = std::move(subs);
  return j.dump() + '\n';
}

SvmModel svm_from_json(std::string_view text) {
  const std::string what = "svm model";
  const json j = parse_json(text, what);
  require_object(j, what, {"C", "gamma", "tol", "classes", "num_features", "submodels"});
  SvmModel m;
  m.C = as_double(field(j, "C", what), what + ": C");
  m.gamma = as_double(field(j, "gamma", what), what + ": gamma");
  m.tol = as_double(field(j, "tol", what), what + ": tol");
  m.num_features = static_cast<Index>(as_int(field(j, "num_features", what), what + ": num_features"));
  const json& classes = field(j, "classes", what);
  if (!classes.is_array() || classes.size() < 2) throw IoError(what + ": need at least two classes");
  for (const auto& c : classes) m.classes.push_back(static_cast<int>(as_int(c, what + ": classes")));
  const json& subs = field(j, "submodels", what);
  const std::size_t expected = m.classes.size() == 2 ? 1 : m.classes.size();
  if (!subs.is_array() || subs.size() != expected)
    throw IoError(what + ": expected " + std::to_string(expected) + " submodels");
  for (const auto& js : subs) {
    require_object(js, what, {"positive_class", "bias", "support", "coef", "iterations", "final_gap"});
    BinarySvm s;
    s.positive_class = static_cast<int>(as_int(field(js, "positive_class", what), what + ": positive_class"));
    s.bias = as_double(field(js, "bias", what), what + ": bias");
    const json& coef = field(js, "coef", what);
    if (!coef.is_array()) throw IoError(what + ": coef must be an array");
    s.support = matrix_from_json(field(js, "support", what), static_cast<Index>(coef.size()), m.num_features,
                                 what + ": support");
    s.coef = row_from_json(coef, static_cast<Index>(coef.size()), what + ": coef").transpose();
    s.iterations = static_cast<int>(as_int(field(js, "iterations", what), what + ": iterations"));
    s.final_gap = as_double(field(js, "final_gap", what), what + ": final_gap");
    m.submodels.push_back(std::move(s));
  }
  return m;
}

void write_svm(const fs::path& path, const SvmModel& model) { write_text(path, svm_to_json(model)); }

SvmModel read_svm(const fs::path& path) {
  try {
    return svm_from_json(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace mvsel::io
