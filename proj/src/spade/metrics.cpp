#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mentor/error.hpp"
#include "mentor/spade/spade.hpp"

namespace mentor::spade {

std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  return "# mentor-curriculum v" MENTOR_VERSION " seed=" + std::to_string(seed) + " config_hash=" + hex;
}

namespace {

void put_real(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows, std::uint64_t seed,
                       std::uint64_t config_hash) {
  out << provenance_line(seed, config_hash) << '\n' << kMetricsHeader << '\n';
  for (const EpochMetrics& m : rows) {
    out << m.epoch << ',' << m.step;
    for (double v : {m.weighted_loss, m.unweighted_loss, m.val_acc, m.mean_w_clean, m.mean_w_corrupt,
                     m.grad_norm_sq, m.lr, m.theta_t}) {
      out << ',';
      put_real(out, v);
    }
    out << '\n';
  }
}

std::vector<EpochMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<EpochMetrics> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kMetricsHeader) {
        throw ParseError("metrics CSV line " + std::to_string(line_no) + ": unexpected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) {
      throw ParseError("metrics CSV line " + std::to_string(line_no) + ": expected 10 fields, got " +
                       std::to_string(f.size()));
    }
    double v[10];
    for (std::size_t k = 0; k < 10; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(f[k].c_str(), &end);
      if (f[k].empty() || end != f[k].c_str() + f[k].size()) {
        throw ParseError("metrics CSV line " + std::to_string(line_no) + ": bad value \"" + f[k] + "\"");
      }
    }
    if (!(v[0] >= 0.0) || !(v[1] >= 0.0) || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
      throw ParseError("metrics CSV line " + std::to_string(line_no) + ": epoch and step must be counts");
    }
    EpochMetrics m;
    m.epoch = static_cast<std::size_t>(v[0]);
    m.step = static_cast<std::size_t>(v[1]);
    m.weighted_loss = v[2];
    m.unweighted_loss = v[3];
    m.val_acc = v[4];
    m.mean_w_clean = v[5];
    m.mean_w_corrupt = v[6];
    m.grad_norm_sq = v[7];
    m.lr = v[8];
    m.theta_t = v[9];
    rows.push_back(m);
  }
  if (!header) throw ParseError("metrics CSV: missing header");
  return rows;
}

}  // namespace mentor::spade
