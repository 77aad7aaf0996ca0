#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"
#include "mentor/curriculum/weights.hpp"
#include "mentor/mentornet/mentornet.hpp"
#include "mentor/mentornet/training.hpp"

namespace mentor::cli {

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitUsage = 2 };

// ---- approx ----

enum class Regime { implicit_fit, explicit_fit };

struct ApproxSettings {
  curriculum::CurriculumParams curriculum;
  std::size_t samples = 30000;
  std::uint64_t seed = 1;
  mentornet::Architecture arch = mentornet::Architecture::bilstm;
  Regime regime = Regime::implicit_fit;
  mentornet::MentorConfig mentor;
  mentornet::MentorTrainOptions training;
};

/// Settings used for the approximation experiment: implicit fits run Adam
/// with a cross-entropy warmup; explicit fits use a smaller step.
ApproxSettings approx_defaults(curriculum::CurriculumKind kind, Regime regime = Regime::implicit_fit);

struct ApproxResult {
  ApproxSettings settings;
  double heldout_mse = 0.0;
  double heldout_abs_error = 0.0;  // explicit regime only, NaN otherwise
  double seconds = 0.0;
  std::vector<double> curve;       // held-out MSE per epoch
  std::vector<double> objective;   // training objective per epoch
};

/// Generates the curriculum dataset and fits a fresh MentorNet to it.
ApproxResult run_approx(const ApproxSettings& settings);

inline constexpr std::string_view kApproxHeader =
    "curriculum,arch,regime,samples,seed,heldout_mse,heldout_abs_error,seconds";
std::string approx_row(const ApproxResult& r);

// ---- report ----

struct RunSummary {
  std::string path;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double final_val_acc = 0.0;
  double final_weight_ratio = 0.0;  // mean_w_clean / mean_w_corrupt, NaN if undefined
  double grad_ratio = 0.0;          // trailing-10% / leading-10% mean grad_norm_sq
  double loss_ratio = 0.0;          // final / first weighted loss
  [[nodiscard]] bool converged() const { return grad_ratio <= 0.2; }
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t count = 0;
};

/// Mean and sample standard deviation over the finite entries.
Aggregate aggregate(const std::vector<double>& values);

/// Reads one metrics CSV. Throws ParseError naming the line.
RunSummary summarize_metrics(const std::filesystem::path& path);

struct Report {
  std::vector<RunSummary> runs;
  Aggregate val_acc;
  Aggregate weight_ratio;
  Aggregate grad_ratio;
  Aggregate loss_ratio;
};

Report build_report(const std::vector<std::filesystem::path>& paths);
void print_report(std::ostream& out, const Report& report);
nlohmann::json report_json(const Report& report);

// ---- entry point ----

/// Parses argv and runs a subcommand. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mentor::cli
