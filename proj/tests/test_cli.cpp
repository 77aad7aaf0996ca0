#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/suites.hpp"
#include "doctest.h"
#include "mentor/student/student.hpp"

using namespace mentor;
using namespace mentor::cli;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("mentor_cli_" + std::to_string(::getpid()) + "_" +
                                                     std::to_string(counter()++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mentor");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string metrics_file(std::uint64_t seed, const std::vector<spade::EpochMetrics>& rows) {
  std::ostringstream out;
  spade::write_metrics_csv(out, rows, seed, 0x1234);
  return out.str();
}

spade::EpochMetrics row(std::size_t epoch, double acc, double grad, double loss) {
  spade::EpochMetrics m;
  m.epoch = epoch;
  m.step = epoch * 10;
  m.val_acc = acc;
  m.grad_norm_sq = grad;
  m.weighted_loss = loss;
  m.mean_w_clean = 0.9;
  m.mean_w_corrupt = 0.3;
  return m;
}

}  // namespace

TEST_CASE("config files: every key round-trips through the canonical dump") {
  RunConfig a;
  std::vector<std::string> problems;
  std::istringstream in(R"([data]
generator = concentric-rings
n_train = 321
separation = 2.5

[noise]
fraction = 0.3
exclude_true_class = true

[train]
curriculum = mentornet-dd
lr_decay_epochs = 3,7
mentor_update_fractions = 0.3,0.6
optimizer = adam
schedule = inv-sqrt

[student]
hidden = 8,4

[curriculum]
kind = predefined
lambda1 = 0.5

[mentor]
arch = mlp
window = 3
lr_decay_at = 0.5
)");
  load_ini(a, in, problems);
  CHECK(problems.empty());
  CHECK(a.dataset.kind == data::GeneratorKind::concentric_rings);
  CHECK(a.dataset.n_train == 321);
  CHECK(a.corruption.exclude_true_class);
  CHECK(a.train.mode == spade::CurriculumMode::mentornet_dd);
  CHECK(a.train.lr_decay_epochs == std::vector<std::size_t>{3, 7});
  CHECK(a.train.student.hidden == std::vector<std::size_t>{8, 4});
  CHECK(a.train.mentor.arch == mentornet::Architecture::mlp);
  CHECK(a.train.optimizer.kind == netcore::OptimizerKind::adam);

  RunConfig b;
  std::istringstream dump(to_ini(a));
  load_ini(b, dump, problems);
  CHECK(problems.empty());
  CHECK(to_ini(a) == to_ini(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_keys().size() > 50);
}

TEST_CASE("config errors list every offending key") {
  RunConfig c;
  std::vector<std::string> problems;
  std::istringstream in("[train]\nepochs = ten\nbogus = 1\n[nosuch]\nx = 1\n[noise]\nfraction = 0.2\n");
  load_ini(c, in, problems);
  REQUIRE(problems.size() == 3);
  CHECK(problems[0].find("train.epochs") != std::string::npos);
  CHECK(problems[1].find("train.bogus") != std::string::npos);
  CHECK(problems[2].find("nosuch.x") != std::string::npos);
  CHECK(c.corruption.noise_fraction == 0.2);

  c.corruption.noise_fraction = 1.5;
  c.train.keep_prob = 0.0;
  try {
    finalize(c, problems);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() == 5);
    CHECK(std::string(e.what()).find("noise") != std::string::npos);
    CHECK(std::string(e.what()).find("train") != std::string::npos);
  }

  std::vector<std::string> syntax;
  std::istringstream broken("[data\nn_train = 3\n");
  load_ini(c, broken, syntax);
  REQUIRE(syntax.size() == 1);
  CHECK(syntax[0].find("line 1") != std::string::npos);
}

TEST_CASE("config hash ignores seeds and output location only") {
  RunConfig a;
  RunConfig b = a;
  b.set_seed(99);
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.train.epochs = 7;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("MENTOR_OUT_DIR overrides the configured output directory") {
  ::unsetenv("MENTOR_OUT_DIR");
  CHECK(resolve_out_dir("cfg") == "cfg");
  ::setenv("MENTOR_OUT_DIR", "/tmp/envdir", 1);
  CHECK(resolve_out_dir("cfg") == "/tmp/envdir");
  ::setenv("MENTOR_OUT_DIR", "", 1);
  CHECK(resolve_out_dir("cfg") == "cfg");
  ::unsetenv("MENTOR_OUT_DIR");
}

TEST_CASE("verify suites pass and usage errors exit with 2") {
  TempDir dir;
  for (std::string_view suite : kSuiteNames) {
    const auto reports = run_suites(suite, 1);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].pass);
    CHECK(reports[0].max_error <= reports[0].cases.front().tolerance);
  }
  const CliRun ok = invoke({"verify", "--suite", "penalties", "--out", dir.path.string()});
  CHECK(ok.code == kExitPass);
  const auto doc = nlohmann::json::parse(slurp(dir.path / "verify_penalties.json"));
  CHECK(doc[0]["suite"] == "penalties");
  CHECK(doc[0]["pass"] == true);
  CHECK(doc[0]["max_error"].get<double>() <= 1e-6);

  CHECK(invoke({"verify", "--suite", "nope", "--out", dir.path.string()}).code == kExitUsage);
  CHECK(invoke({"frobnicate"}).code == kExitUsage);
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"approx", "--curriculum", "prediction-variance", "--out", dir.path.string()}).code == kExitUsage);
  CHECK(invoke({"train", "--set", "train.nonsense=1", "--out", dir.path.string()}).code == kExitUsage);
  const CliRun bad = invoke({"train", "--noise", "2", "--set", "train.epochs=x", "--out", dir.path.string()});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("train.epochs") != std::string::npos);
  CHECK(bad.err.find("noise") != std::string::npos);
}

TEST_CASE("train writes reproducible metrics and loadable checkpoints") {
  TempDir a, b;
  const std::vector<std::string> common = {"train", "--noise", "0.4", "--curriculum", "mentornet-dd",
                                           "--epochs", "6", "--seed", "7", "--set", "mentor.epochs=3"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--out", a.path.string()});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--out", b.path.string()});
  REQUIRE(invoke(args_a).code == kExitPass);
  REQUIRE(invoke(args_b).code == kExitPass);
  const std::string csv = slurp(a.path / "metrics_seed7.csv");
  CHECK(csv == slurp(b.path / "metrics_seed7.csv"));
  CHECK(csv.rfind("# mentor-curriculum v" MENTOR_VERSION " seed=7 config_hash=", 0) == 0);
  CHECK(std::filesystem::exists(a.path / "mentor_seed7.mnet"));
  CHECK(slurp(a.path / "student_seed7.snet") == slurp(b.path / "student_seed7.snet"));
  const auto st = student::load_student(a.path / "student_seed7.snet");
  CHECK(st.num_classes() == 4);

  RunConfig reloaded;
  std::vector<std::string> problems;
  load_ini_file(reloaded, a.path / "config_seed7.ini", problems);
  CHECK(problems.empty());
  CHECK(reloaded.train.seed == 7);
  CHECK(reloaded.train.epochs == 6);
}

TEST_CASE("train on clean default blobs") {
  TempDir dir;
  const CliRun r = invoke({"train", "--noise", "0.0", "--curriculum", "none", "--out", dir.path.string()});
  REQUIRE(r.code == kExitPass);
  std::ifstream in(dir.path / "metrics_seed1.csv");
  const auto rows = spade::read_metrics_csv(in);
  REQUIRE(rows.size() == 100);
  CHECK(rows.back().val_acc > 0.95);
}

TEST_CASE("train --seeds runs each seed and aggregates") {
  TempDir dir;
  const CliRun r = invoke({"train", "--seeds", "3,4", "--epochs", "3", "--out", dir.path.string()});
  REQUIRE(r.code == kExitPass);
  CHECK(std::filesystem::exists(dir.path / "metrics_seed3.csv"));
  CHECK(std::filesystem::exists(dir.path / "metrics_seed4.csv"));
  CHECK(r.out.find("over 2 seeds") != std::string::npos);
  CHECK(invoke({"train", "--seeds", "3,x", "--out", dir.path.string()}).code == kExitUsage);
  CHECK(invoke({"train", "--seeds", "3", "--seed", "4", "--out", dir.path.string()}).code == kExitUsage);
}

TEST_CASE("aggregate statistics") {
  const Aggregate one = aggregate({0.7});
  CHECK(one.mean == 0.7);
  CHECK(one.stddev == 0.0);
  const Aggregate same = aggregate({0.8, 0.8, 0.8, 0.8, 0.8});
  CHECK(same.mean == doctest::Approx(0.8));
  CHECK(same.stddev == doctest::Approx(0.0).epsilon(1e-15));
  const Aggregate two = aggregate({1.0, 3.0, std::nan("")});
  CHECK(two.count == 2);
  CHECK(two.mean == 2.0);
  CHECK(two.stddev == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("report summarizes metrics files and rejects malformed ones") {
  TempDir dir;
  std::vector<spade::EpochMetrics> rows;
  for (std::size_t e = 0; e < 20; ++e) rows.push_back(row(e, 0.5 + 0.02 * e, 10.0 / (1.0 + e), 2.0 - 0.09 * e));
  write_text(dir.path / "a.csv", metrics_file(5, rows));
  const Report single = build_report({dir.path / "a.csv"});
  CHECK(single.val_acc.mean == rows.back().val_acc);
  CHECK(single.val_acc.stddev == 0.0);
  CHECK(single.runs[0].seed == 5);
  CHECK(single.runs[0].final_weight_ratio == doctest::Approx(3.0));
  CHECK(single.runs[0].grad_ratio == doctest::Approx((10.0 / 20 + 10.0 / 19) / (10.0 + 5.0)));
  CHECK(single.runs[0].converged());

  std::vector<std::filesystem::path> paths;
  for (int s = 0; s < 5; ++s) {
    paths.push_back(dir.path / ("s" + std::to_string(s) + ".csv"));
    write_text(paths.back(), metrics_file(s, rows));
  }
  const Report five = build_report(paths);
  CHECK(five.val_acc.stddev == 0.0);
  CHECK(five.runs.size() == 5);

  const CliRun r = invoke({"report", (dir.path / "a.csv").string(), "--json", (dir.path / "r.json").string()});
  CHECK(r.code == kExitPass);
  CHECK(r.out.find("final val_acc") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(dir.path / "r.json"));
  CHECK(doc["val_acc"]["stddev"].get<double>() == 0.0);

  std::string text = metrics_file(1, rows);
  text += "20,200,1,2,3\n";
  write_text(dir.path / "bad.csv", text);
  try {
    build_report({dir.path / "bad.csv"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 23") != std::string::npos);
  }
  const CliRun bad = invoke({"report", (dir.path / "bad.csv").string()});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("line 23") != std::string::npos);
  CHECK(invoke({"report", (dir.path / "missing.csv").string()}).code == kExitUsage);
}

TEST_CASE("approx writes a provenance-tagged row and curve") {
  TempDir dir;
  const CliRun r = invoke({"approx", "--curriculum", "linear", "--samples", "600", "--epochs", "3", "--mlp",
                        "--out", dir.path.string()});
  REQUIRE(r.code == kExitPass);
  const std::string csv = slurp(dir.path / "approx_linear_bilstm_implicit_seed1.csv");
  CHECK(csv.rfind("# mentor-curriculum v", 0) == 0);
  CHECK(csv.find(kApproxHeader) != std::string::npos);
  CHECK(std::filesystem::exists(dir.path / "approx_linear_mlp_implicit_seed1.csv"));
  CHECK(std::filesystem::exists(dir.path / "approx_linear_bilstm_implicit_seed1_curve.csv"));

  const CliRun ex = invoke({"approx", "--curriculum", "self-paced", "--samples", "600", "--epochs", "2",
                         "--explicit", "--out", dir.path.string()});
  CHECK(ex.code == kExitPass);
  CHECK(invoke({"approx", "--curriculum", "focal", "--explicit", "--out", dir.path.string()}).code == kExitUsage);
  CHECK(invoke({"approx", "--curriculum", "linear", "--samples", "600", "--epochs", "1", "--max-mse", "1e-12",
             "--out", dir.path.string()})
            .code == kExitCheckFailed);
}
