#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mentor/data/dataset.hpp"
#include "mentor/error.hpp"
#include "mentor/spade/spade.hpp"

namespace mentor::cli {

/// Everything a training run needs. Sections of the config file:
///   [data] [noise] [train] [student] [curriculum] [mentor] [output]
struct RunConfig {
  data::DatasetSpec dataset;
  data::CorruptionSpec corruption;
  spade::TrainConfig train;
  std::string out_dir = "mentor_out";

  /// Sets the training, data and corruption seeds together.
  void set_seed(std::uint64_t seed);
};

/// Raised when a config file or override is invalid. Carries one message per
/// offending key.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// "section.key" names accepted by apply_setting, in file order.
std::vector<std::string> config_keys();

/// Sets one "section.key" to `value`. Appends a message to `problems` for an
/// unknown key or an unparseable value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   std::vector<std::string>& problems);

/// Reads a sectioned key=value file into `config`, collecting every problem.
void load_ini(RunConfig& config, std::istream& in, std::vector<std::string>& problems);
void load_ini_file(RunConfig& config, const std::filesystem::path& path, std::vector<std::string>& problems);

/// Validates every component and throws ConfigError listing each failure
/// together with `problems`. Fills student input_dim / num_classes from the data.
void finalize(RunConfig& config, std::vector<std::string> problems = {});

/// Canonical sectioned dump of every key; load_ini of it reproduces `config`.
std::string to_ini(const RunConfig& config);

/// FNV-1a of to_ini with the seeds and output directory blanked, so runs that
/// differ only by seed share a hash.
std::uint64_t config_hash(const RunConfig& config);

/// MENTOR_OUT_DIR if set and non-empty, else `fallback`.
std::filesystem::path resolve_out_dir(const std::string& fallback);

}  // namespace mentor::cli
