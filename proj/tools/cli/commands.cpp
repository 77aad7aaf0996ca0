#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mentor/rng.hpp"
#include "mentor/spade/spade.hpp"
#include "mentor/student/student.hpp"
#include "suites.hpp"

namespace mentor::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string arch_name(mentornet::Architecture a) { return a == mentornet::Architecture::bilstm ? "bilstm" : "mlp"; }
std::string regime_name(Regime r) { return r == Regime::implicit_fit ? "implicit" : "explicit"; }

std::uint64_t approx_hash(const ApproxSettings& s) {
  std::ostringstream o;
  const auto& t = s.training;
  o << curriculum::kind_name(s.curriculum.kind) << ' ' << fmt_real(s.curriculum.lambda) << ' '
    << fmt_real(s.curriculum.lambda1) << ' ' << fmt_real(s.curriculum.lambda2) << ' '
    << fmt_real(s.curriculum.gamma) << ' ' << s.curriculum.switch_pct << ' ' << s.samples << ' '
    << arch_name(s.arch) << ' ' << regime_name(s.regime) << ' ' << s.mentor.window << ' '
    << fmt_real(s.mentor.embedding_init) << ' ' << t.epochs << ' ' << t.batch_size << ' '
    << fmt_real(t.learning_rate) << ' ' << fmt_real(t.lr_decay) << ' ' << t.cross_entropy_warmup << ' '
    << fmt_real(t.weight_decay) << ' ' << fmt_real(t.embedding_decay) << ' ' << fmt_real(t.epoch_smoothing)
    << ' ' << fmt_real(t.average_tail) << ' ' << fmt_real(t.holdout_fraction);
  for (double f : t.lr_decay_at) o << ' ' << fmt_real(f);
  return fnv1a64(o.str());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::filesystem::path out_dir_for(const std::string& flag, const std::string& fallback) {
  return prepare_dir(flag.empty() ? resolve_out_dir(fallback) : std::filesystem::path(flag));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (item.empty() || pos != item.size()) throw ConfigError({"--seeds: bad seed \"" + item + "\""});
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError({"--seeds: empty list"});
  return seeds;
}

// ---- subcommand bodies ----

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const std::vector<SuiteReport> reports = run_suites(a.suite, a.seed);
  const auto dir = out_dir_for(a.out, "mentor_out");
  nlohmann::json doc = nlohmann::json::array();
  bool all = true;
  for (const SuiteReport& r : reports) {
    out << (r.pass ? "PASS " : "FAIL ") << r.suite << ": " << r.cases.size()
        << " cases, max_error=" << fmt_short(r.max_error) << " (" << fmt_short(r.seconds) << " s)\n";
    for (const CaseResult& c : r.cases) {
      if (!c.passed()) out << "  failed " << c.name << ": " << fmt_short(c.error) << " > " << c.tolerance << "\n";
    }
    doc.push_back(to_json(r));
    all = all && r.pass;
  }
  const auto path = dir / ("verify_" + a.suite + ".json");
  write_file(path, doc.dump(2) + "\n");
  out << "report: " << path.string() << "\n";
  return all ? kExitPass : kExitCheckFailed;
}

struct ApproxArgs {
  std::string curriculum;
  std::size_t samples = 30000;
  std::uint64_t seed = 1;
  std::string arch = "bilstm";
  bool also_mlp = false;
  bool explicit_regime = false;
  std::optional<std::size_t> epochs;
  std::optional<double> max_mse;
  std::string out;
};

int cmd_approx(const ApproxArgs& a, std::ostream& out) {
  const auto kind = curriculum::parse_kind(a.curriculum);
  const Regime regime = a.explicit_regime ? Regime::explicit_fit : Regime::implicit_fit;
  if (regime == Regime::explicit_fit && !curriculum::CurriculumParams{kind}.has_penalty()) {
    throw ConfigError({"--explicit: curriculum \"" + a.curriculum + "\" has no closed-form penalty"});
  }
  std::vector<mentornet::Architecture> archs;
  if (a.arch == "bilstm") {
    archs.push_back(mentornet::Architecture::bilstm);
  } else if (a.arch == "mlp") {
    archs.push_back(mentornet::Architecture::mlp);
  } else {
    throw ConfigError({"--arch: expected bilstm or mlp"});
  }
  if (a.also_mlp && archs.front() != mentornet::Architecture::mlp) archs.push_back(mentornet::Architecture::mlp);
  if (a.samples == 0) throw ConfigError({"--samples: must be positive"});

  const auto dir = out_dir_for(a.out, "mentor_out");
  bool ok = true;
  for (auto arch : archs) {
    ApproxSettings s = approx_defaults(kind, regime);
    s.samples = a.samples;
    s.seed = a.seed;
    s.arch = arch;
    s.mentor.arch = arch;
    if (a.epochs) s.training.epochs = *a.epochs;
    const ApproxResult r = run_approx(s);
    const std::uint64_t hash = approx_hash(s);
    const std::string stem = "approx_" + std::string(curriculum::kind_name(kind)) + "_" + arch_name(arch) + "_" +
                             regime_name(regime) + "_seed" + std::to_string(a.seed);
    const std::string head = spade::provenance_line(a.seed, hash) + "\n";
    write_file(dir / (stem + ".csv"), head + std::string(kApproxHeader) + "\n" + approx_row(r) + "\n");
    std::string curve = head + "epoch,heldout_mse,objective\n";
    for (std::size_t e = 0; e < r.curve.size(); ++e) {
      curve += std::to_string(e) + "," + fmt_real(r.curve[e]) + "," + fmt_real(r.objective[e]) + "\n";
    }
    write_file(dir / (stem + "_curve.csv"), curve);
    out << kApproxHeader << "\n" << approx_row(r) << "\n";
    if (a.max_mse && !(r.heldout_mse <= *a.max_mse)) ok = false;
  }
  return ok ? kExitPass : kExitCheckFailed;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::optional<double> noise;
  std::optional<std::string> curriculum;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::optional<std::size_t> epochs;
  std::string out;
};

struct SeedRun {
  std::uint64_t seed = 0;
  spade::RunResult result;
  std::string error;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg;
  std::vector<std::string> problems;
  if (!a.config.empty()) load_ini_file(cfg, a.config, problems);
  for (const std::string& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      problems.push_back("--set " + s + ": expected section.key=value");
      continue;
    }
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1), problems);
  }
  if (a.noise) cfg.corruption.noise_fraction = *a.noise;
  if (a.curriculum) apply_setting(cfg, "train.curriculum", *a.curriculum, problems);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.seed && !a.seeds.empty()) problems.push_back("--seed and --seeds are mutually exclusive");
  if (a.seed) cfg.set_seed(*a.seed);
  finalize(cfg, problems);

  std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector<std::uint64_t>{cfg.train.seed}
                                                     : parse_seed_list(a.seeds);
  const auto dir = out_dir_for(a.out, cfg.out_dir);
  const std::uint64_t hash = config_hash(cfg);

  std::vector<SeedRun> runs(seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      RunConfig c = cfg;
      c.set_seed(seeds[i]);
      runs[i].seed = seeds[i];
      try {
        const data::LabeledDataset ds = data::corrupt_labels(data::make_synthetic(c.dataset), c.corruption);
        runs[i].result = spade::run_spade(ds, c.train);
      } catch (const Error& e) {
        runs[i].error = e.what();
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(seeds.size(), std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool ok = true;
  std::vector<double> finals;
  for (const SeedRun& r : runs) {
    const std::string tag = "seed" + std::to_string(r.seed);
    if (!r.error.empty()) {
      out << tag << ": training failed: " << r.error << "\n";
      ok = false;
      continue;
    }
    RunConfig c = cfg;
    c.set_seed(r.seed);
    write_file(dir / ("config_" + tag + ".ini"), to_ini(c));
    std::ostringstream csv;
    spade::write_metrics_csv(csv, r.result.metrics, r.seed, hash);
    write_file(dir / ("metrics_" + tag + ".csv"), csv.str());
    student::save_student(r.result.student, dir / ("student_" + tag + ".snet"));
    if (r.result.mentor) mentornet::save_mentor(*r.result.mentor, dir / ("mentor_" + tag + ".mnet"));
    const double acc = r.result.metrics.empty() ? kNaN : r.result.metrics.back().val_acc;
    finals.push_back(acc);
    out << tag << ": final val_acc " << fmt_short(acc) << " -> " << (dir / ("metrics_" + tag + ".csv")).string()
        << "\n";
  }
  if (finals.size() > 1) {
    const Aggregate g = aggregate(finals);
    out << "val_acc mean " << fmt_short(g.mean) << " stddev " << fmt_short(g.stddev) << " over " << g.count
        << " seeds\n";
  }
  return ok ? kExitPass : kExitCheckFailed;
}

struct ReportArgs {
  std::vector<std::string> files;
  std::string json;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<std::filesystem::path> paths(a.files.begin(), a.files.end());
  const Report r = build_report(paths);
  print_report(out, r);
  if (!a.json.empty()) write_file(a.json, report_json(r).dump(2) + "\n");
  return kExitPass;
}

}  // namespace

ApproxSettings approx_defaults(curriculum::CurriculumKind kind, Regime regime) {
  ApproxSettings s;
  s.curriculum.kind = kind;
  s.regime = regime;
  auto& t = s.training;
  if (regime == Regime::implicit_fit) {
    // wide embeddings kept in check by decay, with epoch rows tied to their neighbours
    s.mentor.embedding_init = 1.0;
    t.epochs = 200;
    t.learning_rate = 1e-3;
    t.cross_entropy_warmup = 30;
    t.lr_decay_at = {0.5, 0.8};
    t.embedding_decay = 1.0;
    t.epoch_smoothing = 3.0;
  } else {
    t.epochs = 40;
    t.learning_rate = 3e-3;
  }
  return s;
}

ApproxResult run_approx(const ApproxSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  settings.curriculum.validate();
  const Rng root(settings.seed);
  Rng data_rng = root.substream("data");
  mentornet::GenerationOptions gen;
  gen.window = settings.mentor.window;
  gen.label_vocab = settings.mentor.label_vocab;
  mentornet::MentorConfig mc = settings.mentor;
  mc.arch = settings.arch;
  Rng init_rng = root.substream("init");
  mentornet::MentorParams params = mentornet::MentorParams::init(mc, init_rng);
  mentornet::MentorTrainOptions opts = settings.training;
  opts.seed = root.substream("train").next_u64();

  ApproxResult r;
  r.settings = settings;
  const auto data = mentornet::generate_curriculum_dataset(settings.curriculum, settings.samples, data_rng, gen);
  if (settings.regime == Regime::implicit_fit) {
    const auto fit = mentornet::train_implicit(data, params, opts);
    r.heldout_mse = fit.final_mse();
    r.heldout_abs_error = kNaN;
    r.curve = fit.heldout_mse;
    r.objective = fit.train_loss;
  } else {
    std::vector<mentornet::MentorFeatures> zs;
    zs.reserve(data.size());
    for (const auto& ex : data) zs.push_back(ex.z);
    const auto fit = mentornet::train_explicit(zs, settings.curriculum, params, opts);
    r.heldout_mse = fit.heldout_mse.empty() ? kNaN : fit.heldout_mse.back();
    r.heldout_abs_error = fit.heldout_abs_error.empty() ? kNaN : fit.heldout_abs_error.back();
    r.curve = fit.heldout_mse;
    r.objective = fit.objective;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string approx_row(const ApproxResult& r) {
  const ApproxSettings& s = r.settings;
  return std::string(curriculum::kind_name(s.curriculum.kind)) + "," + arch_name(s.arch) + "," +
         regime_name(s.regime) + "," + std::to_string(s.samples) + "," + std::to_string(s.seed) + "," +
         fmt_real(r.heldout_mse) + "," + fmt_real(r.heldout_abs_error) + "," + fmt_short(r.seconds);
}

Aggregate aggregate(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) return {kNaN, kNaN, 0};
  // shifted by the first value so identical inputs give exactly that value and 0
  double shift = 0.0;
  for (double x : v) shift += x - v.front();
  Aggregate g;
  g.count = v.size();
  g.mean = v.front() + shift / static_cast<double>(g.count);
  if (g.count > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - g.mean) * (x - g.mean);
    g.stddev = std::sqrt(ss / static_cast<double>(g.count - 1));
  }
  return g;
}

RunSummary summarize_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  RunSummary s;
  s.path = path.string();
  std::string first;
  std::getline(in, first);
  const auto at = first.find("seed=");
  if (first.rfind("# mentor-curriculum", 0) != 0 || at == std::string::npos) {
    throw ParseError(path.string() + ": line 1: missing provenance comment");
  }
  s.seed = std::strtoull(first.c_str() + at + 5, nullptr, 10);
  in.seekg(0);
  std::vector<spade::EpochMetrics> rows;
  try {
    rows = spade::read_metrics_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (rows.empty()) throw ParseError(path.string() + ": no epochs recorded");
  s.epochs = rows.size();
  const auto& last = rows.back();
  s.final_val_acc = last.val_acc;
  s.final_weight_ratio = last.mean_w_clean / last.mean_w_corrupt;
  const std::size_t k = std::max<std::size_t>(1, rows.size() / 10);
  double lead = 0.0;
  double trail = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    lead += rows[i].grad_norm_sq;
    trail += rows[rows.size() - 1 - i].grad_norm_sq;
  }
  s.grad_ratio = trail / lead;
  s.loss_ratio = last.weighted_loss / rows.front().weighted_loss;
  return s;
}

Report build_report(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw InputError("report needs at least one metrics file");
  Report r;
  std::vector<double> acc, ratio, grad, loss;
  for (const auto& p : paths) {
    r.runs.push_back(summarize_metrics(p));
    acc.push_back(r.runs.back().final_val_acc);
    ratio.push_back(r.runs.back().final_weight_ratio);
    grad.push_back(r.runs.back().grad_ratio);
    loss.push_back(r.runs.back().loss_ratio);
  }
  r.val_acc = aggregate(acc);
  r.weight_ratio = aggregate(ratio);
  r.grad_ratio = aggregate(grad);
  r.loss_ratio = aggregate(loss);
  return r;
}

void print_report(std::ostream& out, const Report& report) {
  out << "seed  epochs  val_acc   w_clean/w_corrupt  grad_ratio  loss_ratio  converged  file\n";
  for (const RunSummary& s : report.runs) {
    char line[256];
    std::snprintf(line, sizeof line, "%-5llu %-7zu %-9.4f %-18s %-11.4g %-11.4g %-10s ",
                  static_cast<unsigned long long>(s.seed), s.epochs, s.final_val_acc,
                  fmt_short(s.final_weight_ratio).c_str(), s.grad_ratio, s.loss_ratio, s.converged() ? "yes" : "no");
    out << line << s.path << "\n";
  }
  const auto row = [&](const char* name, const Aggregate& g) {
    out << name << ": mean " << fmt_short(g.mean) << " stddev " << fmt_short(g.stddev) << " (n=" << g.count
        << ")\n";
  };
  row("final val_acc", report.val_acc);
  row("clean/corrupt weight ratio", report.weight_ratio);
  row("grad-norm ratio", report.grad_ratio);
  row("weighted-loss ratio", report.loss_ratio);
}

nlohmann::json report_json(const Report& report) {
  // NaN is not valid JSON; undefined statistics become null
  const auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nullptr; };
  const auto agg = [&](const Aggregate& g) {
    return nlohmann::json{{"mean", num(g.mean)}, {"stddev", num(g.stddev)}, {"count", g.count}};
  };
  nlohmann::json runs = nlohmann::json::array();
  for (const RunSummary& s : report.runs) {
    runs.push_back({{"path", s.path},
                    {"seed", s.seed},
                    {"epochs", s.epochs},
                    {"final_val_acc", num(s.final_val_acc)},
                    {"final_weight_ratio", num(s.final_weight_ratio)},
                    {"grad_ratio", num(s.grad_ratio)},
                    {"loss_ratio", num(s.loss_ratio)},
                    {"converged", s.converged()}});
  }
  return {{"runs", runs},
          {"val_acc", agg(report.val_acc)},
          {"weight_ratio", agg(report.weight_ratio)},
          {"grad_ratio", agg(report.grad_ratio)},
          {"loss_ratio", agg(report.loss_ratio)}};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MentorNet / SPADE curriculum learning on synthetic corrupted-label data", "mentor"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mentor-curriculum " MENTOR_VERSION);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run invariant suites and write a JSON report");
  verify->add_option("--suite", va.suite, "closed-form, penalties, robust, gradcheck or all")->capture_default_str();
  verify->add_option("--seed", va.seed, "seed for randomized cases")->capture_default_str();
  verify->add_option("--out", va.out, "output directory (default: $MENTOR_OUT_DIR or mentor_out)");

  ApproxArgs aa;
  auto* approx = app.add_subcommand("approx", "fit MentorNet to a predefined curriculum");
  approx->add_option("--curriculum", aa.curriculum, "target curriculum")->required();
  approx->add_option("--samples", aa.samples, "synthesized (features, weight) pairs")->capture_default_str();
  approx->add_option("--seed", aa.seed)->capture_default_str();
  approx->add_option("--arch", aa.arch, "bilstm or mlp")->capture_default_str();
  approx->add_flag("--mlp", aa.also_mlp, "also fit the MLP ablation");
  approx->add_flag("--explicit", aa.explicit_regime, "explicit training against the closed-form penalty");
  approx->add_option("--epochs", aa.epochs, "override the training epochs");
  approx->add_option("--max-mse", aa.max_mse, "exit 1 if the held-out MSE exceeds this");
  approx->add_option("--out", aa.out, "output directory");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "run SPADE training");
  train->add_option("--config", ta.config, "sectioned key=value config file");
  train->add_option("--set", ta.sets, "override, e.g. --set train.epochs=50")->allow_extra_args(false);
  train->add_option("--noise", ta.noise, "label corruption fraction (noise.fraction)");
  train->add_option("--curriculum", ta.curriculum, "none, mentornet-dd, mentornet-pd, explicit-g or constant");
  train->add_option("--seed", ta.seed, "training, data and corruption seed");
  train->add_option("--seeds", ta.seeds, "comma-separated seeds, one run each");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--out", ta.out, "output directory");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "summarize metrics CSVs");
  report->add_option("files", ra.files, "metrics CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--json", ra.json, "also write the summary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(va, out);
    if (approx->parsed()) return cmd_approx(aa, out);
    if (train->parsed()) return cmd_train(ta, out);
    if (report->parsed()) return cmd_report(ra, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace mentor::cli
