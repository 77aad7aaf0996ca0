// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Artifacts go to MENTOR_ACCEPTANCE_DIR.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/suites.hpp"
#include "mentor/data/dataset.hpp"
#include "mentor/mentornet/mentornet.hpp"
#include "mentor/spade/spade.hpp"
#include "mentor/student/student.hpp"

using namespace mentor;
using namespace mentor::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path artifact_dir(const std::string& name) {
  const fs::path dir = fs::path(MENTOR_ACCEPTANCE_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int invoke(std::vector<std::string> args, std::string* output = nullptr) {
  args.insert(args.begin(), "mentor");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (output) *output = out.str();
  if (code != kExitPass && code != kExitCheckFailed) std::cerr << err.str();
  return code;
}

// Field `column` of the last line of an approx printout.
double approx_field(const std::string& output, std::size_t column) {
  std::istringstream lines(output);
  std::string line, last;
  while (std::getline(lines, line)) {
    if (!line.empty()) last = line;
  }
  std::istringstream fields(last);
  std::string f;
  for (std::size_t i = 0; i <= column && std::getline(fields, f, ','); ++i) {
  }
  return std::strtod(f.c_str(), nullptr);
}

Outcome suite_outcome(const SuiteReport& r, double max_seconds) {
  const bool fast = r.seconds <= max_seconds;
  return {r.pass && fast, "max_err=" + fmt(r.max_error) + " cases=" + std::to_string(r.cases.size()) +
                              (fast ? "" : " over time budget")};
}

Outcome a1() { return suite_outcome(verify_closed_form(1), 10.0); }
Outcome a2() { return suite_outcome(verify_penalties(1), 5.0); }
Outcome a3() { return suite_outcome(verify_robust(), 5.0); }

Outcome a4() {
  const SuiteReport r = verify_gradcheck(1);
  Outcome o = suite_outcome(r, 60.0);
  for (const char* unit : {"dense", "embedding", "lstm_cell", "bilstm", "softmax_xent", "mentornet", "student"}) {
    std::size_t shapes = 0;
    for (const auto& c : r.cases) {
      if (c.name.rfind(std::string(unit) + "_", 0) == 0 || c.name.rfind(std::string(unit) + "[", 0) == 0) ++shapes;
    }
    if (shapes < 3) {
      o.pass = false;
      o.detail += std::string(" ") + unit + " has " + std::to_string(shapes) + " shapes";
    }
  }
  return o;
}

Outcome a5() {
  const fs::path dir = artifact_dir("a5");
  Outcome o{true, ""};
  for (const char* kind : {"self-paced", "hard-negative", "linear", "focal", "temporal-mixture"}) {
    std::string out;
    const auto start = std::chrono::steady_clock::now();
    const int code = invoke({"approx", "--curriculum", kind, "--seed", "1", "--out", dir.string()}, &out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double mse = code == kExitPass ? approx_field(out, 5) : NAN;
    const bool ok = mse <= 1e-3 && secs <= 300.0;
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : " ") + kind + "=" + fmt(mse) + (ok ? "" : "(!)");
  }
  return o;
}

Outcome a6() {
  const fs::path dir = artifact_dir("a6");
  std::string out;
  const int code = invoke({"approx", "--curriculum", "self-paced", "--explicit", "--seed", "1", "--out", dir.string()},
                          &out);
  std::string implicit;
  invoke({"approx", "--curriculum", "self-paced", "--seed", "1", "--out", dir.string()}, &implicit);
  const double err = code == kExitPass ? approx_field(out, 6) : NAN;
  return {err <= 0.05, "mean_abs_err=" + fmt(err) + " curves in " + dir.string()};
}

Outcome a7() {
  data::DatasetSpec spec;
  data::CorruptionSpec noise;
  noise.noise_fraction = 0.4;
  const data::LabeledDataset ds = data::corrupt_labels(data::make_synthetic(spec), noise);
  spade::TrainConfig cfg;
  cfg.mode = spade::CurriculumMode::explicit_g;
  cfg.curriculum.kind = curriculum::CurriculumKind::predefined;
  const spade::RunResult r = spade::run_spade(ds, cfg);

  const auto& g = r.step_grad_norm_sq;
  const std::size_t k = std::max<std::size_t>(1, g.size() / 10);
  double lead = 0.0, trail = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    lead += g[i];
    trail += g[g.size() - 1 - i];
  }
  const double grad_ratio = trail / lead;
  const auto burn = static_cast<std::size_t>(std::ceil(cfg.burn_in_fraction * static_cast<double>(cfg.epochs)));
  const double loss_ratio = r.metrics.back().weighted_loss / r.metrics.at(burn).weighted_loss;
  return {grad_ratio <= 0.2 && loss_ratio < 0.2, "grad_ratio=" + fmt(grad_ratio) + " loss_ratio=" + fmt(loss_ratio)};
}

Report train_arm(const fs::path& dir, const std::string& mode, const std::string& noise) {
  const std::string seeds = "1,2,3,4,5";
  if (invoke({"train", "--curriculum", mode, "--noise", noise, "--seeds", seeds, "--set", "student.theta0=0", "--out",
              dir.string()}) != kExitPass) {
    return {};
  }
  std::vector<fs::path> files;
  for (int s = 1; s <= 5; ++s) files.push_back(dir / ("metrics_seed" + std::to_string(s) + ".csv"));
  return build_report(files);
}

Outcome a8() {
  const fs::path dir = artifact_dir("a8");
  const Report base = train_arm(dir / "none_p0.4", "none", "0.4");
  const Report dd = train_arm(dir / "dd_p0.4", "mentornet-dd", "0.4");
  const Report base0 = train_arm(dir / "none_p0", "none", "0");
  const Report dd0 = train_arm(dir / "dd_p0", "mentornet-dd", "0");
  if (base.runs.size() != 5 || dd.runs.size() != 5 || base0.runs.size() != 5 || dd0.runs.size() != 5) {
    return {false, "training failed"};
  }
  const double gain = dd.val_acc.mean - base.val_acc.mean;
  const double ratio = dd.weight_ratio.mean;
  const double harm = std::abs(dd0.val_acc.mean - base0.val_acc.mean);
  return {gain >= 0.05 && ratio >= 1.5 && harm <= 0.02,
          "gain=" + fmt(gain) + " (dd " + fmt(dd.val_acc.mean) + " vs " + fmt(base.val_acc.mean) +
              ") weight_ratio=" + fmt(ratio) + " clean_gap=" + fmt(harm)};
}

Outcome a9() {
  Outcome o{true, ""};
  for (std::size_t m : {2u, 10u}) {
    data::DatasetSpec spec;
    spec.n_train = 100000;
    spec.n_val = 0;
    spec.num_classes = m;
    spec.dim = 10;
    const data::LabeledDataset clean = data::make_synthetic(spec);
    for (double p : {0.2, 0.4, 0.8}) {
      data::CorruptionSpec noise;
      noise.noise_fraction = p;
      noise.seed = 7;
      const double got = data::corrupted_fraction(data::corrupt_labels(clean, noise));
      const double want = p * (1.0 - 1.0 / static_cast<double>(m));
      const double err = std::abs(got - want);
      if (err > 0.01) o.pass = false;
      o.detail += std::string(o.detail.empty() ? "" : " ") + "m" + std::to_string(m) + "p" + fmt(p) + "=" + fmt(err);
    }
  }
  return o;
}

template <class Params>
bool same_arrays(const Params& a, const Params& b) {
  const auto x = a.arrays();
  const auto y = b.arrays();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(*x[i] == *y[i])) return false;
  }
  return true;
}

Outcome a10() {
  const fs::path dir = artifact_dir("a10");
  std::string detail;
  bool pass = true;
  for (const char* run : {"run1", "run2"}) {
    const std::string cmd = std::string("\"") + MENTOR_BIN + "\" train --curriculum mentornet-dd --noise 0.4 --seed 3 --out \"" +
                            (dir / run).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, std::string(run) + " failed"};
  }
  const std::string a = read_bytes(dir / "run1" / "metrics_seed3.csv");
  const std::string b = read_bytes(dir / "run2" / "metrics_seed3.csv");
  const bool same_csv = !a.empty() && a == b;
  pass = pass && same_csv;
  detail += same_csv ? "metrics identical" : "metrics differ";

  // Rerun in process from the dumped config and compare with the saved checkpoints.
  RunConfig cfg;
  std::vector<std::string> problems;
  load_ini_file(cfg, dir / "run1" / "config_seed3.ini", problems);
  finalize(cfg, problems);
  const data::LabeledDataset ds = data::corrupt_labels(data::make_synthetic(cfg.dataset), cfg.corruption);
  const spade::RunResult r = spade::run_spade(ds, cfg.train);
  const student::StudentParams s = student::load_student(dir / "run1" / "student_seed3.snet");
  const mentornet::MentorParams mn = mentornet::load_mentor(dir / "run1" / "mentor_seed3.mnet");
  student::save_student(s, dir / "resaved.snet");
  mentornet::save_mentor(mn, dir / "resaved.mnet");
  const bool same_ckpt = r.mentor && same_arrays(s, r.student) && same_arrays(mn, *r.mentor) &&
                         read_bytes(dir / "resaved.snet") == read_bytes(dir / "run1" / "student_seed3.snet") &&
                         read_bytes(dir / "resaved.mnet") == read_bytes(dir / "run1" / "mentor_seed3.mnet");
  pass = pass && same_ckpt;
  detail += same_ckpt ? ", checkpoints bit-exact" : ", checkpoint mismatch";
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  bool all = true;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  (" << fmt(secs) << " s)"
              << std::endl;
  }
  return all ? 0 : 1;
}
