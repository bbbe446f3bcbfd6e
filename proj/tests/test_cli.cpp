#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "strb/cli.hpp"
#include "strb/config.hpp"
#include "strb/csvio.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace strb;

namespace {

namespace fs = std::filesystem;

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string& tag) {
    root = fs::temp_directory_path() / ("strb_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string dir() const { return root.string(); }
  std::string path(const std::string& name) const { return (root / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream os(path(name));
    os << text;
    return path(name);
  }
};

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  int rc = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string base_config(const std::string& out_dir, const std::string& extra = "") {
  return std::string("{\n") +
         "  \"problem\": \"graetz_distributed\",\n"
         "  \"mode\": \"steady\",\n"
         "  \"nx\": 4, \"ny\": 4,\n"
         "  \"alpha\": 0.01,\n"
         "  \"tol\": 1e-10, \"max_iters\": 3,\n"
         "  \"n_train\": 8, \"n_test\": 3, \"seed\": 5,\n"
         "  \"out_dir\": \"" +
         out_dir + "\"" + (extra.empty() ? "" : ",\n" + extra) + "\n}\n";
}

}  // namespace

TEST_CASE("exit codes: help, parse errors and malformed configs") {
  std::string out;
  CHECK(cli({"--help"}, &out) == 0);
  CHECK(out.find("mesh-info") != std::string::npos);

  CHECK(cli({"bogus-subcommand"}) == 2);
  CHECK(cli({"greedy"}) == 2);  // --config is required
  CHECK(cli({"mesh-info", "--config", "/nonexistent/nope.json"}) == 2);

  Sandbox sb("cfg");
  std::string err;
  CHECK(cli({"mesh-info", "--config", sb.write("bad.json", "{ not json")}, nullptr, &err) == 2);
  CHECK(!err.empty());

  CHECK(cli({"mesh-info", "--config",
             sb.write("unknown.json", "{\"problem\":\"graetz_distributed\",\"tolx\":1}")},
            nullptr, &err) == 2);
  CHECK(err.find("tolx") != std::string::npos);

  CHECK(cli({"mesh-info", "--config", sb.write("badprob.json", "{\"problem\":\"heat\"}")}, nullptr,
            &err) == 2);
  CHECK(err.find("heat") != std::string::npos);

  CHECK(cli({"mesh-info", "--config", sb.write("badtol.json", "{\"tol\": -1}")}, nullptr, &err) ==
        2);
  CHECK(cli({"mesh-info", "--config", sb.write("badnx.json", "{\"nx\": 0}")}, nullptr, &err) == 2);
}

TEST_CASE("config serialization is canonical and lossless") {
  const std::string text =
      "{\"problem\":\"graetz_boundary\",\"mode\":\"unsteady\",\"nx\":7,\"ny\":5,"
      "\"T\":2.5,\"n_t\":6,\"alpha\":0.07,\"bound_case\":\"control_bound\","
      "\"tol\":1e-3,\"max_iters\":12,\"n_train\":49,\"n_test\":4,\"seed\":11,"
      "\"out_dir\":\"/tmp/x\",\"exact_eta\":true,\"mesh_dump\":true,\"extrapolate_mu\":true,"
      "\"online\":{\"mu\":[[10,2,1],[8,1.5,2]],\"compare_hf\":true},"
      "\"sweep\":{\"mu1_points\":3,\"alphas\":[1.0,0.1],\"mu2\":2.0,\"mu3\":1.0},"
      "\"hf\":{\"mu\":[12,2,2],\"export_csv\":true}}";
  RunConfig c = parse_config_json(text);
  CHECK(c.problem == "graetz_boundary");
  CHECK(c.n_t == 6);
  CHECK(c.online.mu.size() == 2);
  CHECK(c.online.mu[1] == Mu(8.0, 1.5, 2.0));
  CHECK(c.sweep.mu2.has_value());
  CHECK(c.hf.mu.has_value());

  const std::string once = config_to_json(c);
  const std::string twice = config_to_json(parse_config_json(once));
  CHECK(once == twice);

  // defaults survive a round trip too
  RunConfig d = parse_config_json("{}");
  CHECK(config_to_json(d) == config_to_json(parse_config_json(config_to_json(d))));
}

TEST_CASE("mesh-info: summary output and optional dump") {
  Sandbox sb("mesh");
  std::string cfg = sb.write("c.json", base_config(sb.dir(), "  \"mesh_dump\": true"));
  std::string out;
  CHECK(cli({"mesh-info", "--config", cfg}, &out) == 0);
  CHECK(out.find("nodes=") != std::string::npos);
  CHECK(out.find("region") != std::string::npos);

  CsvTable nodes = CsvTable::read_file(sb.path("mesh_nodes.csv"));
  CsvTable tris = CsvTable::read_file(sb.path("mesh_triangles.csv"));
  CHECK(nodes.column("x") >= 0);
  CHECK(tris.column("region") >= 0);
  CHECK(!nodes.rows.empty());
  CHECK(!tris.rows.empty());
}

TEST_CASE("hf-solve: cost reporting, snapshot export, extrapolation gating") {
  Sandbox sb("hf");
  std::string cfg = sb.write("c.json", base_config(sb.dir(), "  \"hf\": {\"export_csv\": true}"));
  std::string out;
  CHECK(cli({"hf-solve", "--config", cfg}, &out) == 0);
  CHECK(out.find("cost=") != std::string::npos);
  CsvTable snap = CsvTable::read_file(sb.path("snapshot.csv"));
  CHECK(snap.column("y") >= 0);
  CHECK(snap.column("p") >= 0);
  CHECK(!snap.rows.empty());

  // outside-box evaluation requires the explicit extrapolation flag
  std::string out_cfg =
      sb.write("outside.json", base_config(sb.dir(), "  \"hf\": {\"mu\": [2.0, 1.0, 2.0]}"));
  CHECK(cli({"hf-solve", "--config", out_cfg}) == 2);
  std::string ok_cfg = sb.write(
      "outside_ok.json",
      base_config(sb.dir(), "  \"extrapolate_mu\": true,\n  \"hf\": {\"mu\": [2.0, 1.0, 2.0]}"));
  CHECK(cli({"hf-solve", "--config", ok_cfg}) == 0);
}

TEST_CASE("greedy: artifacts, pinned schemas and determinism") {
  Sandbox a("greedy_a"), b("greedy_b");
  std::string out;
  CHECK(cli({"greedy", "--config", a.write("c.json", base_config(a.dir()))}, &out) == 0);
  CHECK(out.find("greedy: N=") != std::string::npos);

  CsvTable hist = CsvTable::read_file(a.path("greedy_history.csv"));
  CHECK(hist.header ==
        std::vector<std::string>{"iteration", "N", "mu1", "mu2", "mu3", "delta_max"});
  CHECK(hist.rows.size() == 3);  // capped at max_iters snapshots

  CsvTable tab = CsvTable::read_file(a.path("error_table.csv"));
  CHECK(tab.header ==
        std::vector<std::string>{"N", "err_rel", "err_abs", "delta_mean", "eta_mean", "bound_kind"});
  CHECK(tab.rows.size() == 3);
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    CHECK(tab.rows[i][0] == std::to_string(i + 1));
    CHECK(tab.rows[i][5] == "lb");
    CHECK(std::stod(tab.rows[i][4]) >= 1.0);  // mean effectivity certified
  }

  // identical config elsewhere: byte-identical artifacts (timings excluded)
  CHECK(cli({"greedy", "--config", b.write("c.json", base_config(b.dir()))}) == 0);
  CHECK(slurp(a.path("greedy_history.csv")) == slurp(b.path("greedy_history.csv")));
  CHECK(slurp(a.path("error_table.csv")) == slurp(b.path("error_table.csv")));
  CHECK(slurp(a.path("model.bin")) == slurp(b.path("model.bin")));
}

TEST_CASE("greedy stagnation surfaces as a numerical failure") {
  Sandbox sb("stag");
  std::string cfg = sb.write(
      "c.json",
      "{\"problem\":\"graetz_distributed\",\"mode\":\"steady\",\"nx\":4,\"ny\":4,"
      "\"tol\":1e-30,\"max_iters\":5,\"n_train\":1,\"out_dir\":\"" +
          sb.dir() + "\"}");
  std::string err;
  CHECK(cli({"greedy", "--config", cfg}, nullptr, &err) == 3);
  CHECK(err.find("stagnated") != std::string::npos);
  // the history and the model written so far survive the failure
  CHECK(fs::exists(sb.path("greedy_history.csv")));
  CHECK(fs::exists(sb.path("model.bin")));
}

TEST_CASE("online: evaluation rows, box enforcement, degenerate empty run") {
  Sandbox sb("online");
  CHECK(cli({"greedy", "--config", sb.write("train.json", base_config(sb.dir()))}) == 0);

  std::string run_cfg = sb.write(
      "run.json",
      base_config(sb.dir(),
                  "  \"online\": {\"mu\": [[10,1,2],[5,0.7,1.7]], \"compare_hf\": true}"));
  std::string out;
  CHECK(cli({"online", "--config", run_cfg}, &out) == 0);
  CHECK(out.find("speedup=") != std::string::npos);
  CsvTable online = CsvTable::read_file(sb.path("online.csv"));
  CHECK(online.header ==
        std::vector<std::string>{"mu1", "mu2", "mu3", "cost", "delta_n", "solve_seconds"});
  CHECK(online.rows.size() == 2);
  for (const auto& row : online.rows) CHECK(std::stod(row[4]) >= 0.0);

  // a reduced model is never evaluated outside its training box
  std::string bad_cfg = sb.write(
      "bad.json", base_config(sb.dir(), "  \"online\": {\"mu\": [[2.0, 1.0, 2.0]]}"));
  std::string err;
  CHECK(cli({"online", "--config", bad_cfg}, nullptr, &err) == 2);
  CHECK(err.find("outside") != std::string::npos);

  // no explicit points and n_test = 0: just the header
  std::string empty_cfg = sb.write(
      "empty.json",
      "{\"problem\":\"graetz_distributed\",\"mode\":\"steady\",\"nx\":4,\"ny\":4,"
      "\"n_test\":0,\"out_dir\":\"" +
          sb.dir() + "\"}");
  CHECK(cli({"online", "--config", empty_cfg}) == 0);
  CHECK(slurp(sb.path("online.csv")) == "mu1,mu2,mu3,cost,delta_n,solve_seconds\n");

  // pointing at a missing model is a configuration error
  CHECK(cli({"online", "--config", run_cfg, "--model", sb.path("nope.bin")}) == 2);
}

TEST_CASE("sweep: grid cross product and rigor column") {
  Sandbox sb("sweep");
  std::string cfg = sb.write(
      "c.json",
      "{\"problem\":\"graetz_distributed\",\"mode\":\"steady\",\"nx\":3,\"ny\":3,"
      "\"out_dir\":\"" +
          sb.dir() + "\",\"sweep\":{\"mu1_points\":2,\"alphas\":[1.0,0.01]}}");
  std::string out;
  CHECK(cli({"sweep", "--config", cfg}, &out) == 0);
  CsvTable tab = CsvTable::read_file(sb.path("infsup_sweep.csv"));
  CHECK(tab.header == std::vector<std::string>{"mu1", "mu2", "mu3", "alpha", "beta_lb",
                                               "beta_exact", "rigor", "mode"});
  CHECK(tab.rows.size() == 4);
  for (const auto& row : tab.rows) {
    CHECK(std::stod(row[6]) >= 1.0 - 1e-9);
    CHECK(row[7] == "steady");
  }
}

TEST_CASE("report: renders the error table and validates its schema") {
  Sandbox sb("report");
  CHECK(cli({"greedy", "--config", sb.write("c.json", base_config(sb.dir()))}) == 0);
  std::string out;
  CHECK(cli({"report", "--table", sb.path("error_table.csv")}, &out) == 0);
  CHECK(out.find("bound") != std::string::npos);
  CHECK(out.find("lb") != std::string::npos);

  CHECK(cli({"report", "--table", sb.path("missing.csv")}) == 2);

  std::string broken = sb.write("broken.csv", "N,err_rel,err_abs\n1,0.5,0.1\n");
  std::string err;
  CHECK(cli({"report", "--table", broken}, nullptr, &err) == 2);
  CHECK(err.find("delta_mean") != std::string::npos);
}
