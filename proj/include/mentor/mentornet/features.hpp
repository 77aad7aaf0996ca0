#pragma once

#include <cstddef>
#include <deque>
#include <vector>

namespace mentor::mentornet {

/// Per-sample MentorNet input: loss and loss-minus-moving-average histories
/// (oldest first, most recent last), the observed label and the integer
/// training-progress percentage.
struct MentorFeatures {
  std::vector<double> loss_history;
  std::vector<double> diff_history;
  int label_id = 0;
  int epoch_pct = 0;

  [[nodiscard]] std::size_t window() const { return loss_history.size(); }
  [[nodiscard]] double loss() const { return loss_history.back(); }
  /// Throws InputError unless both histories are non-empty and equally long
  /// (InputError) and epoch_pct lies in [0, 100) (BoundsError).
  void validate() const;
};

/// Rolling (loss, loss - loss_pt) pairs for one sample, newest last.
class LossRecord {
 public:
  explicit LossRecord(std::size_t capacity = 1) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(double loss, double loss_pt);
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const std::deque<std::pair<double, double>>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<std::pair<double, double>> entries_;
};

/// Builds features from the last `window` entries of `record`, left-padding
/// with the oldest entry when fewer exist. Throws StateError on an empty record.
/// With `fix_label_zero` the label is replaced by 0 (transfer across class counts).
MentorFeatures featurize(const LossRecord& record, int label, int epoch_pct, std::size_t window,
                         bool fix_label_zero = false);

/// Integer progress percentage in [0, 99] for `epoch` of `total_epochs`.
int epoch_percentage(std::size_t epoch, std::size_t total_epochs);

}  // namespace mentor::mentornet
