#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvsel/cli.hpp"
#include "mvsel/io.hpp"
#include "mvsel/rng.hpp"

using namespace mvsel;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mvsel_test_" + name);
  fs::remove_all(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void write_json(const fs::path& path, const std::string& text) { io::write_text(path, text); }

const char* kSmallConfig = R"({"K": 2, "hidden_widths": [8, 16], "lr_net": 0.01, "lr_z": 0.01, "max_iters": 40})";

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv round trip is exact") {
  Rng rng(8);
  Matrix m = normal_matrix(7, 5, rng);
  m(0, 0) = 0.1;
  m(1, 1) = 1e-300;
  m(2, 2) = -123456789.123456789;
  m(3, 3) = 0.0;
  const Matrix back = io::parse_csv_matrix(io::format_csv_matrix(m));
  CHECK(back == m);
  CHECK(io::format_csv_matrix(Matrix::Ones(1, 2)) == "v0,v1\n1,1\n");
  CHECK(io::format_double(0.1) == "0.1");
}

TEST_CASE("csv errors name the location") {
  try {
    io::parse_csv_matrix("a,b\n1,2\n3\n", "x.csv");
    FAIL("expected an error");
  } catch (const io::IoError& e) {
    CHECK(std::string(e.what()).find("x.csv: line 3") != std::string::npos);
  }
  try {
    io::parse_csv_matrix("a,b\n1,2\n3,oops\n", "x.csv");
    FAIL("expected an error");
  } catch (const io::IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_csv_matrix("a\nnan\n"), io::IoError);
  CHECK_THROWS_AS(io::parse_csv_matrix(""), io::IoError);
  CHECK_THROWS_AS(io::read_matrix_csv("/nonexistent/file.csv"), io::IoError);
}

TEST_CASE("labels and index lists") {
  CHECK(io::parse_labels(io::format_labels({1, 2, 2, 3})) == std::vector<int>{1, 2, 2, 3});
  CHECK_THROWS(io::parse_labels("label\n1.5\n"));
  const auto list = io::parse_index_list(io::format_index_list({4, 0, 9}, 20));
  CHECK(list.indices == std::vector<Index>{4, 0, 9});
  CHECK(list.num_variables == 20);
  CHECK_FALSE(io::parse_index_list("# note\n3\n").num_variables.has_value());
  CHECK_THROWS(io::parse_index_list("-1\n"));
}

TEST_CASE("config json") {
  const auto cfg = io::config_from_json(R"({"K": 3, "hidden_widths": [[4], [5, 6]], "lambdas": [0.2, 0.3],
                                           "svm_gamma": null, "use_laplacian": true})");
  CHECK(cfg.K == 3);
  CHECK(cfg.hidden_for(1) == std::vector<Index>{5, 6});
  CHECK(cfg.lambda_for(1) == 0.3);
  CHECK(cfg.use_laplacian);
  CHECK_FALSE(cfg.svm_gamma.has_value());
  const auto back = io::config_from_json(io::config_to_json(cfg));
  CHECK(back.hidden_widths == cfg.hidden_widths);
  CHECK(back.lambdas == cfg.lambdas);
  CHECK(back.K == 3);
  CHECK_THROWS(io::config_from_json(R"({"K": 2, "bogus": 1})"));
  CHECK_THROWS(io::config_from_json(R"({"K": "two"})"));
  CHECK_THROWS(io::config_from_json(R"({"K": 0})"));
  CHECK_THROWS(io::config_from_json("{"));
}

TEST_CASE("checkpoint round trip") {
  Rng rng(4);
  io::Checkpoint ck;
  ck.stage = 2;
  ck.config.K = 3;
  ck.config.group_norm = true;
  ck.networks.push_back(init_network(make_architecture(3, {4, 5}, 6, true), rng, 0));
  ck.networks.push_back(init_network(make_architecture(3, {}, 2, false), rng, 1));
  ck.latent = normal_matrix(4, 3, rng);
  ck.standardization = {standardize_fit(normal_matrix(5, 10, rng)), standardize_fit(normal_matrix(5, 8, rng))};
  ck.view_dims = {10, 8};
  ck.selection = std::vector<std::vector<Index>>{{0, 1, 2, 3, 4, 5}, {6, 7}};
  ck.converged = true;
  ck.iterations_run = 17;
  const auto back = io::checkpoint_from_json(io::checkpoint_to_json(ck));
  CHECK(back.stage == 2);
  CHECK(back.latent == ck.latent);
  CHECK(back.view_dims == ck.view_dims);
  CHECK(back.selection == ck.selection);
  CHECK(back.iterations_run == 17);
  CHECK(back.converged);
  REQUIRE(back.networks.size() == 2);
  for (std::size_t d = 0; d < 2; ++d) {
    REQUIRE(back.networks[d].layers.size() == ck.networks[d].layers.size());
    for (std::size_t l = 0; l < ck.networks[d].layers.size(); ++l) {
      CHECK(back.networks[d].layers[l].W == ck.networks[d].layers[l].W);
      CHECK(back.networks[d].layers[l].b == ck.networks[d].layers[l].b);
      CHECK(back.networks[d].layers[l].gamma == ck.networks[d].layers[l].gamma);
    }
    CHECK(back.standardization[d].mean == ck.standardization[d].mean);
    CHECK(back.standardization[d].sd == ck.standardization[d].sd);
  }
  CHECK(io::checkpoint_to_json(back) == io::checkpoint_to_json(ck));
  std::string broken = io::checkpoint_to_json(ck);
  broken.replace(broken.find("\"format_version\""), 16, "\"format_versio\"");
  CHECK_THROWS(io::checkpoint_from_json(broken));
}

TEST_CASE("svm model round trip") {
  Rng rng(12);
  const Matrix x = normal_matrix(30, 2, rng);
  std::vector<int> y(30);
  for (Index i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = 1 + static_cast<int>(i % 3);
  const auto m = svm_fit(x, y, {});
  const auto back = io::svm_from_json(io::svm_to_json(m));
  const Matrix test = normal_matrix(20, 2, rng);
  CHECK(svm_decision_values(back, test) == svm_decision_values(m, test));
  CHECK(back.classes == m.classes);
}

TEST_CASE("percent formatting rounds half up") {
  CHECK(cli::format_percent(1.0 / 3.0) == "33.33");
  CHECK(cli::format_percent(2.0 / 3.0) == "66.67");
  CHECK(cli::format_percent(0.0) == "0.00");
  CHECK(cli::format_percent(1.0) == "100.00");
  CHECK(cli::format_percent(0.00125) == "0.13");
  CHECK(cli::format_percent(0.5) == "50.00");
}

}

TEST_SUITE("cli") {

TEST_CASE("simulate writes the dataset and is byte-reproducible") {
  const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
  for (const auto& dir : {a, b}) {
    const auto r = run_cli({"simulate", "nonlinear", "--seed", "5", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
  }
  const Matrix v1 = io::read_matrix_csv(a / "views_1.csv");
  CHECK(v1.rows() == 350);
  CHECK(v1.cols() == 500);
  CHECK(io::read_labels(a / "labels.csv").size() == 350);
  const auto truth = io::read_index_list(a / "truth_2.txt");
  CHECK(truth.indices.size() == 50);
  CHECK(truth.num_variables == 500);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    CHECK(io::read_text(entry.path()) == io::read_text(b / name));
  }
  const auto manifest = io::read_text(a / "manifest.json");
  CHECK(manifest.find("\"simulate\"") != std::string::npos);
}

TEST_CASE("simulate graph and linear scenarios with a held-out draw") {
  const fs::path dir = fresh_dir("sim_graph");
  auto r = run_cli({"simulate", "lattice", "--p1", "80", "--p2", "60", "--n1", "10", "--n2", "12", "--test-n1", "5",
                    "--test-n2", "5", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "graph_1.txt"));
  CHECK(io::read_matrix_csv(dir / "test" / "views_2.csv").rows() == 10);
  CHECK(io::read_matrix_csv(dir / "views_2.csv").cols() == 60);
  CHECK(io::read_index_list(dir / "truth_1.txt").indices.size() == 49);

  const fs::path lin = fresh_dir("sim_linear");
  r = run_cli({"simulate", "linear", "--n-per-class", "10", "--p1", "30", "--p2", "25", "--out-dir", lin.string()});
  REQUIRE(r.code == 0);
  CHECK(io::read_matrix_csv(lin / "views_1.csv").rows() == 30);
  CHECK(io::read_labels(lin / "labels.csv").back() == 3);
}

TEST_CASE("errors are one line with a nonzero exit code") {
  auto expect_error = [](const std::vector<std::string>& args) {
    const auto r = run_cli(args);
    CHECK(r.code != 0);
    const auto lines = lines_of(r.err);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("mvsel: error: ", 0) == 0);
  };
  expect_error({});
  expect_error({"simulate", "spiral", "--out-dir", fresh_dir("bad_scenario").string()});
  expect_error({"simulate", "nonlinear"});
  expect_error({"train", "--view", "/nonexistent.csv", "--out-dir", fresh_dir("bad_view").string()});
  expect_error({"evaluate", "--out-dir", fresh_dir("bad_eval").string()});
  expect_error({"simulate", "nonlinear", "--seed", "x", "--out-dir", fresh_dir("bad_seed").string()});
  const fs::path blocker = fresh_dir("blocker");
  io::write_text(blocker, "not a directory");
  expect_error({"simulate", "nonlinear", "--p1", "50", "--p2", "50", "--n1", "3", "--n2", "3", "--out-dir",
                (blocker / "sub").string()});
  fs::remove(blocker);
}

TEST_CASE("version flag") {
  const auto r = run_cli({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(cli::kToolVersion) != std::string::npos);
}

TEST_CASE("train, rank, refit, predict and evaluate") {
  const fs::path dir = fresh_dir("pipeline");
  REQUIRE(run_cli({"simulate", "nonlinear", "--n1", "20", "--n2", "15", "--p1", "60", "--p2", "50", "--test-n1",
                   "10", "--test-n2", "10", "--out-dir", dir.string()})
              .code == 0);
  const fs::path cfg = dir / "config.json";
  write_json(cfg, kSmallConfig);
  const std::string v1 = (dir / "views_1.csv").string(), v2 = (dir / "views_2.csv").string();

  // Zero iterations still writes a usable checkpoint.
  const fs::path zero = dir / "zero";
  REQUIRE(run_cli({"train", "--view", v1, "--view", v2, "--config", cfg.string(), "--max-iters", "0", "--out-dir",
                   zero.string()})
              .code == 0);
  const auto ck0 = io::read_checkpoint(zero / "checkpoint_stage1.json");
  CHECK(ck0.iterations_run == 0);
  CHECK(ck0.latent.rows() == 35);

  const fs::path s1 = dir / "s1";
  auto r = run_cli({"train", "--view", v1, "--view", v2, "--config", cfg.string(), "--graph",
                    (dir / "graph_1.txt").string(), "--out-dir", s1.string()});
  CHECK(r.code != 0);  // the nonlinear scenario has no graph files
  r = run_cli({"train", "--view", v1, "--view", v2, "--config", cfg.string(), "--out-dir", s1.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto trace = io::parse_csv_matrix(io::read_text(s1 / "loss_trace_stage1.csv"));
  CHECK(trace.rows() == 41);
  CHECK(trace(40, 1) < trace(0, 1));

  REQUIRE(run_cli({"rank", "--checkpoint", (s1 / "checkpoint_stage1.json").string(), "--out-dir", s1.string()}).code ==
          0);
  const auto sel1 = io::read_index_list(s1 / "selection_1.txt");
  CHECK(sel1.indices.size() == 6);
  CHECK(io::read_index_list(s1 / "selection_2.txt").indices.size() == 5);

  const fs::path s2 = dir / "s2";
  r = run_cli({"refit", "--view", v1, "--view", v2, "--checkpoint", (s1 / "checkpoint_stage1.json").string(),
               "--selection", (s1 / "selection_1.txt").string(), "--selection", (s1 / "selection_2.txt").string(),
               "--labels", (dir / "labels.csv").string(), "--max-iters", "200", "--out-dir", s2.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(s2 / "svm_model.json"));
  const Matrix z2 = io::read_matrix_csv(s2 / "latent_stage2.csv");
  CHECK(z2.rowwise().norm().maxCoeff() <= 1 + 1e-9);
  const Matrix trace2 = io::parse_csv_matrix(io::read_text(s2 / "loss_trace_stage2.csv"));

  // Re-inferring the training samples through a linear refit (convex in the
  // latent code) lands close to the stage-2 fit.
  write_json(dir / "linear.json", R"({"K": 2, "hidden_widths": [], "lr_net": 0.01, "lr_z": 0.01})");
  const fs::path lin = dir / "lin";
  r = run_cli({"refit", "--view", v1, "--view", v2, "--checkpoint", (s1 / "checkpoint_stage1.json").string(),
               "--selection", (s1 / "selection_1.txt").string(), "--selection", (s1 / "selection_2.txt").string(),
               "--config", (dir / "linear.json").string(), "--max-iters", "400", "--out-dir", lin.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const Matrix lin_trace2 = io::parse_csv_matrix(io::read_text(lin / "loss_trace_stage2.csv"));
  const fs::path s3 = dir / "s3";
  r = run_cli({"predict", "--view", v1, "--view", v2, "--checkpoint", (lin / "checkpoint_stage2.json").string(),
               "--max-iters", "400", "--out-dir", s3.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const Matrix trace3 = io::parse_csv_matrix(io::read_text(s3 / "loss_trace_stage3.csv"));
  CHECK(trace3(trace3.rows() - 1, 1) <= 1.1 * lin_trace2(lin_trace2.rows() - 1, 1));
  CHECK(trace2(trace2.rows() - 1, 1) < trace2(0, 1));

  const fs::path s4 = dir / "s4";
  r = run_cli({"predict", "--view", (dir / "test" / "views_1.csv").string(), "--view",
               (dir / "test" / "views_2.csv").string(), "--checkpoint", (s2 / "checkpoint_stage2.json").string(),
               "--classifier", (s2 / "svm_model.json").string(), "--max-iters", "100", "--out-dir", s4.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(io::read_labels(s4 / "predictions.csv").size() == 20);

  const fs::path ev = dir / "ev";
  r = run_cli({"evaluate", "--pred", (s4 / "predictions.csv").string(), "--actual",
               (dir / "test" / "labels.csv").string(), "--selection", (s1 / "selection_1.txt").string(), "--truth",
               (dir / "truth_1.txt").string(), "--out-dir", ev.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto metrics = lines_of(io::read_text(ev / "metrics.csv"));
  CHECK(metrics[0] == "error_rate,tpr_1,fpr_1,f_1");

  // Selecting the planted signals exactly.
  r = run_cli({"evaluate", "--selection", (dir / "truth_1.txt").string(), "--truth", (dir / "truth_1.txt").string(),
               "--out-dir", ev.string()});
  REQUIRE(r.code == 0);
  CHECK(lines_of(io::read_text(ev / "metrics.csv"))[1] == "100.00,0.00,100.00");

  io::write_text(dir / "empty_truth.txt", "# variables 60\n");
  r = run_cli({"evaluate", "--selection", (s1 / "selection_1.txt").string(), "--truth",
               (dir / "empty_truth.txt").string(), "--out-dir", ev.string()});
  CHECK(r.code != 0);

  const auto manifest = io::read_text(s1 / "manifest.json");
  for (const char* key : {"\"train\"", "\"rank\"", "\"seed\"", "\"inputs\""}) CHECK(manifest.find(key) != std::string::npos);
}

TEST_CASE("hypersearch leaderboard") {
  const fs::path dir = fresh_dir("hyper");
  REQUIRE(run_cli({"simulate", "nonlinear", "--n1", "15", "--n2", "15", "--p1", "50", "--p2", "50", "--out-dir",
                   dir.string()})
              .code == 0);
  write_json(dir / "config.json", kSmallConfig);
  write_json(dir / "space.json", R"({"lambda": [0.01, 0.1, 1.0], "K": [1, 2]})");
  auto search = [&](const std::string& out, const std::string& draws) {
    return run_cli({"hypersearch", "--view", (dir / "views_1.csv").string(), "--view", (dir / "views_2.csv").string(),
                    "--labels", (dir / "labels.csv").string(), "--space", (dir / "space.json").string(), "--config",
                    (dir / "config.json").string(), "--n-draws", draws, "--workers", "2", "--out-dir",
                    (dir / out).string()});
  };
  auto r = search("one", "1");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(lines_of(io::read_text(dir / "one" / "leaderboard.csv")).size() == 2);

  REQUIRE(search("a", "4").code == 0);
  REQUIRE(search("b", "4").code == 0);
  const auto board = io::read_text(dir / "a" / "leaderboard.csv");
  CHECK(board == io::read_text(dir / "b" / "leaderboard.csv"));
  const auto rows = lines_of(board);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "rank,draw,K,lambda,validation_error,status");
  std::vector<double> errors;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto last = rows[i].rfind(',');
    const auto prev = rows[i].rfind(',', last - 1);
    errors.push_back(std::stod(rows[i].substr(prev + 1, last - prev - 1)));
  }
  CHECK(std::is_sorted(errors.begin(), errors.end()));
  CHECK(errors.front() <= errors[errors.size() / 2]);

  CHECK(search("too_many", "7").code != 0);
}

}
