#include "mentor/mentornet/features.hpp"

#include <algorithm>
#include <string>

#include "mentor/error.hpp"

namespace mentor::mentornet {

void MentorFeatures::validate() const {
  if (loss_history.empty() || loss_history.size() != diff_history.size()) {
    throw InputError("mentor features need equally long, non-empty loss and diff histories");
  }
  if (epoch_pct < 0 || epoch_pct >= 100) {
    throw BoundsError("epoch percentage " + std::to_string(epoch_pct) + " outside [0, 100)");
  }
}

void LossRecord::push(double loss, double loss_pt) {
  entries_.emplace_back(loss, loss - loss_pt);
  while (entries_.size() > capacity_) entries_.pop_front();
}

MentorFeatures featurize(const LossRecord& record, int label, int epoch_pct, std::size_t window,
                         bool fix_label_zero) {
  if (record.empty()) throw StateError("featurize: sample has no recorded loss");
  if (window == 0) throw InputError("featurize: window must be at least 1");
  MentorFeatures z;
  z.label_id = fix_label_zero ? 0 : label;
  z.epoch_pct = epoch_pct;
  const auto& e = record.entries();
  const std::size_t have = std::min(window, e.size());
  const std::size_t pad = window - have;
  const auto first = e.end() - static_cast<std::ptrdiff_t>(have);
  for (std::size_t i = 0; i < pad; ++i) {
    z.loss_history.push_back(first->first);
    z.diff_history.push_back(first->second);
  }
  for (auto it = first; it != e.end(); ++it) {
    z.loss_history.push_back(it->first);
    z.diff_history.push_back(it->second);
  }
  return z;
}

int epoch_percentage(std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0) return 0;
  const auto pct = static_cast<int>((100 * epoch) / total_epochs);
  return std::clamp(pct, 0, 99);
}

}  // namespace mentor::mentornet
