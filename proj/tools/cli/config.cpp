#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "mentor/rng.hpp"

namespace mentor::cli {

namespace {

std::string join(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration:";
  for (const auto& p : problems) s += "\n  " + p;
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parsers throw std::invalid_argument with a short reason.
double parse_real(std::string_view s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw std::invalid_argument("expected a number");
  return v;
}

std::uint64_t parse_uint(std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw std::invalid_argument("expected a non-negative integer");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false");
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view s, Parse parse) {
  std::vector<T> out;
  const std::string t = trim(s);
  if (t.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = t.find(',', start);
    out.push_back(static_cast<T>(parse(std::string_view(t).substr(start, comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename Fmt>
std::string fmt_list(const std::vector<T>& v, Fmt fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

std::string fmt_uint(std::uint64_t v) { return std::to_string(v); }

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Field accessors are written against a mutable config; get() only reads.
template <typename Proj>
Field real(std::string key, Proj proj) {
  return {std::move(key), [proj](RunConfig& c, std::string_view s) { proj(c) = parse_real(s); },
          [proj](const RunConfig& c) { return fmt_real(proj(const_cast<RunConfig&>(c))); }};
}

template <typename Proj>
Field uint(std::string key, Proj proj) {
  return {std::move(key),
          [proj](RunConfig& c, std::string_view s) {
            using T = std::remove_reference_t<decltype(proj(c))>;
            proj(c) = static_cast<T>(parse_uint(s));
          },
          [proj](const RunConfig& c) {
            return fmt_uint(static_cast<std::uint64_t>(proj(const_cast<RunConfig&>(c))));
          }};
}

template <typename Proj>
Field boolean(std::string key, Proj proj) {
  return {std::move(key), [proj](RunConfig& c, std::string_view s) { proj(c) = parse_bool(s); },
          [proj](const RunConfig& c) { return std::string(proj(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <typename Proj, typename Parse, typename Name>
Field named(std::string key, Proj proj, Parse parse, Name name) {
  return {std::move(key), [proj, parse](RunConfig& c, std::string_view s) { proj(c) = parse(trim(s)); },
          [proj, name](const RunConfig& c) { return std::string(name(proj(const_cast<RunConfig&>(c)))); }};
}

template <typename Proj>
Field real_list(std::string key, Proj proj) {
  return {std::move(key), [proj](RunConfig& c, std::string_view s) { proj(c) = parse_list<double>(s, parse_real); },
          [proj](const RunConfig& c) { return fmt_list(proj(const_cast<RunConfig&>(c)), fmt_real); }};
}

template <typename Proj>
Field uint_list(std::string key, Proj proj) {
  return {std::move(key),
          [proj](RunConfig& c, std::string_view s) { proj(c) = parse_list<std::size_t>(s, parse_uint); },
          [proj](const RunConfig& c) {
            return fmt_list(proj(const_cast<RunConfig&>(c)), [](std::size_t v) { return fmt_uint(v); });
          }};
}

mentornet::Architecture parse_arch(std::string_view s) {
  if (s == "bilstm") return mentornet::Architecture::bilstm;
  if (s == "mlp") return mentornet::Architecture::mlp;
  throw std::invalid_argument("expected bilstm or mlp");
}
std::string_view arch_name(mentornet::Architecture a) {
  return a == mentornet::Architecture::bilstm ? "bilstm" : "mlp";
}

netcore::OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return netcore::OptimizerKind::momentum_sgd;
  if (s == "adam") return netcore::OptimizerKind::adam;
  throw std::invalid_argument("expected sgd or adam");
}
std::string_view optimizer_name(netcore::OptimizerKind k) {
  return k == netcore::OptimizerKind::adam ? "adam" : "sgd";
}

spade::LrSchedule parse_schedule(std::string_view s) {
  if (s == "step") return spade::LrSchedule::step;
  if (s == "inv-sqrt") return spade::LrSchedule::inv_sqrt;
  throw std::invalid_argument("expected step or inv-sqrt");
}
std::string_view schedule_name(spade::LrSchedule s) {
  return s == spade::LrSchedule::step ? "step" : "inv-sqrt";
}

// Library parsers throw ParameterError; rethrow as a value error.
template <typename F>
auto lib_parse(F f) {
  return [f](std::string_view s) {
    try {
      return f(s);
    } catch (const ParameterError& e) {
      throw std::invalid_argument(e.what());
    }
  };
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = RunConfig;
    std::vector<Field> f;
    f.push_back(named("data.generator", [](C& c) -> auto& { return c.dataset.kind; },
                      lib_parse(data::parse_generator), data::generator_name));
    f.push_back(uint("data.n_train", [](C& c) -> auto& { return c.dataset.n_train; }));
    f.push_back(uint("data.n_val", [](C& c) -> auto& { return c.dataset.n_val; }));
    f.push_back(uint("data.num_classes", [](C& c) -> auto& { return c.dataset.num_classes; }));
    f.push_back(uint("data.dim", [](C& c) -> auto& { return c.dataset.dim; }));
    f.push_back(real("data.separation", [](C& c) -> auto& { return c.dataset.separation; }));
    f.push_back(uint("data.seed", [](C& c) -> auto& { return c.dataset.seed; }));

    f.push_back(real("noise.fraction", [](C& c) -> auto& { return c.corruption.noise_fraction; }));
    f.push_back(boolean("noise.exclude_true_class", [](C& c) -> auto& { return c.corruption.exclude_true_class; }));
    f.push_back(uint("noise.seed", [](C& c) -> auto& { return c.corruption.seed; }));

    f.push_back(uint("train.epochs", [](C& c) -> auto& { return c.train.epochs; }));
    f.push_back(uint("train.batch_size", [](C& c) -> auto& { return c.train.batch_size; }));
    f.push_back(real("train.learning_rate", [](C& c) -> auto& { return c.train.learning_rate; }));
    f.push_back(named("train.schedule", [](C& c) -> auto& { return c.train.schedule; }, parse_schedule,
                      schedule_name));
    f.push_back(uint_list("train.lr_decay_epochs", [](C& c) -> auto& { return c.train.lr_decay_epochs; }));
    f.push_back(real("train.lr_decay", [](C& c) -> auto& { return c.train.lr_decay; }));
    f.push_back(real("train.inv_sqrt_tau", [](C& c) -> auto& { return c.train.inv_sqrt_tau; }));
    f.push_back(named("train.optimizer", [](C& c) -> auto& { return c.train.optimizer.kind; }, parse_optimizer,
                      optimizer_name));
    f.push_back(real("train.momentum", [](C& c) -> auto& { return c.train.optimizer.momentum; }));
    f.push_back(boolean("train.sample_with_replacement",
                        [](C& c) -> auto& { return c.train.sample_with_replacement; }));
    f.push_back(named("train.curriculum", [](C& c) -> auto& { return c.train.mode; }, lib_parse(spade::parse_mode),
                      spade::mode_name));
    f.push_back(real("train.constant_weight", [](C& c) -> auto& { return c.train.constant_weight; }));
    f.push_back(real("train.v_learning_rate", [](C& c) -> auto& { return c.train.v_learning_rate; }));
    f.push_back(real("train.burn_in_fraction", [](C& c) -> auto& { return c.train.burn_in_fraction; }));
    f.push_back(real("train.keep_prob", [](C& c) -> auto& { return c.train.keep_prob; }));
    f.push_back(real_list("train.mentor_update_fractions",
                          [](C& c) -> auto& { return c.train.mentor_update_fractions; }));
    f.push_back(boolean("train.mentor_warm_start", [](C& c) -> auto& { return c.train.mentor_warm_start; }));
    f.push_back(real("train.clean_subset_fraction", [](C& c) -> auto& { return c.train.clean_subset_fraction; }));
    f.push_back(uint("train.dd_epoch_copies", [](C& c) -> auto& { return c.train.dd_epoch_copies; }));
    f.push_back(uint("train.pd_samples", [](C& c) -> auto& { return c.train.pd_samples; }));
    f.push_back(real("train.tracker_decay", [](C& c) -> auto& { return c.train.tracker_decay; }));
    f.push_back(real("train.tracker_percentile", [](C& c) -> auto& { return c.train.tracker_percentile; }));
    f.push_back(real("train.grad_norm_smoothing", [](C& c) -> auto& { return c.train.grad_norm_smoothing; }));
    f.push_back(uint("train.seed", [](C& c) -> auto& { return c.train.seed; }));

    f.push_back(uint_list("student.hidden", [](C& c) -> auto& { return c.train.student.hidden; }));
    f.push_back(real("student.keep_prob", [](C& c) -> auto& { return c.train.student.keep_prob; }));
    f.push_back(real("student.theta0", [](C& c) -> auto& { return c.train.student.theta0; }));

    f.push_back(named("curriculum.kind", [](C& c) -> auto& { return c.train.curriculum.kind; },
                      lib_parse(curriculum::parse_kind), curriculum::kind_name));
    f.push_back(real("curriculum.lambda", [](C& c) -> auto& { return c.train.curriculum.lambda; }));
    f.push_back(real("curriculum.lambda1", [](C& c) -> auto& { return c.train.curriculum.lambda1; }));
    f.push_back(real("curriculum.lambda2", [](C& c) -> auto& { return c.train.curriculum.lambda2; }));
    f.push_back(real("curriculum.gamma", [](C& c) -> auto& { return c.train.curriculum.gamma; }));
    f.push_back(uint("curriculum.switch_pct", [](C& c) -> auto& { return c.train.curriculum.switch_pct; }));

    f.push_back(named("mentor.arch", [](C& c) -> auto& { return c.train.mentor.arch; }, parse_arch, arch_name));
    f.push_back(uint("mentor.window", [](C& c) -> auto& { return c.train.mentor.window; }));
    f.push_back(uint("mentor.lstm_hidden", [](C& c) -> auto& { return c.train.mentor.lstm_hidden; }));
    f.push_back(uint("mentor.fc1_width", [](C& c) -> auto& { return c.train.mentor.fc1_width; }));
    f.push_back(real("mentor.embedding_init", [](C& c) -> auto& { return c.train.mentor.embedding_init; }));
    f.push_back(uint("mentor.epochs", [](C& c) -> auto& { return c.train.mentor_training.epochs; }));
    f.push_back(uint("mentor.batch_size", [](C& c) -> auto& { return c.train.mentor_training.batch_size; }));
    f.push_back(real("mentor.learning_rate", [](C& c) -> auto& { return c.train.mentor_training.learning_rate; }));
    f.push_back(real_list("mentor.lr_decay_at", [](C& c) -> auto& { return c.train.mentor_training.lr_decay_at; }));
    f.push_back(real("mentor.lr_decay", [](C& c) -> auto& { return c.train.mentor_training.lr_decay; }));
    f.push_back(real("mentor.holdout_fraction",
                     [](C& c) -> auto& { return c.train.mentor_training.holdout_fraction; }));
    f.push_back(uint("mentor.cross_entropy_warmup",
                     [](C& c) -> auto& { return c.train.mentor_training.cross_entropy_warmup; }));
    f.push_back(real("mentor.weight_decay", [](C& c) -> auto& { return c.train.mentor_training.weight_decay; }));
    f.push_back(real("mentor.embedding_decay", [](C& c) -> auto& { return c.train.mentor_training.embedding_decay; }));
    f.push_back(real("mentor.epoch_smoothing", [](C& c) -> auto& { return c.train.mentor_training.epoch_smoothing; }));
    f.push_back(real("mentor.average_tail", [](C& c) -> auto& { return c.train.mentor_training.average_tail; }));

    f.push_back({"output.dir", [](C& c, std::string_view s) { c.out_dir = trim(s); },
                 [](const C& c) { return c.out_dir; }});
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

template <typename F>
void check(std::vector<std::string>& problems, std::string_view what, F f) {
  try {
    f();
  } catch (const Error& e) {
    problems.push_back(std::string(what) + ": " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join(problems)), problems_(std::move(problems)) {}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  dataset.seed = seed;
  corruption.seed = seed;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   std::vector<std::string>& problems) {
  const Field* f = find_field(key);
  if (!f) {
    problems.push_back(std::string(key) + ": unknown key");
    return;
  }
  try {
    f->set(config, value);
  } catch (const std::exception& e) {
    problems.push_back(std::string(key) + ": bad value \"" + trim(value) + "\" (" + e.what() + ")");
  }
}

void load_ini(RunConfig& config, std::istream& in, std::vector<std::string>& problems) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    problems.push_back("line " + std::to_string(e.line()) + ": " + e.message());
    return;
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      problems.push_back(section + ": key outside any section");
      continue;
    }
    for (const auto& [key, value] : body) apply_setting(config, section + "." + key, value.data(), problems);
  }
}

void load_ini_file(RunConfig& config, const std::filesystem::path& path, std::vector<std::string>& problems) {
  std::ifstream in(path);
  if (!in) {
    problems.push_back(path.string() + ": cannot open");
    return;
  }
  load_ini(config, in, problems);
}

void finalize(RunConfig& config, std::vector<std::string> problems) {
  check(problems, "data", [&] { config.dataset.validate(); });
  check(problems, "noise", [&] { config.corruption.validate(); });
  config.train.student.input_dim = config.dataset.dim;
  config.train.student.num_classes = config.dataset.num_classes;
  check(problems, "student", [&] { config.train.student.validate(); });
  check(problems, "curriculum", [&] { config.train.curriculum.validate(); });
  check(problems, "mentor", [&] {
    config.train.mentor.validate();
    config.train.mentor_training.validate();
  });
  check(problems, "train", [&] { config.train.validate(); });
  if (config.out_dir.empty()) problems.push_back("output.dir: must not be empty");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  RunConfig c = config;
  c.set_seed(0);
  c.out_dir.clear();
  return fnv1a64(to_ini(c));
}

std::filesystem::path resolve_out_dir(const std::string& fallback) {
  const char* env = std::getenv("MENTOR_OUT_DIR");
  if (env && *env) return env;
  return fallback;
}

}  // namespace mentor::cli
