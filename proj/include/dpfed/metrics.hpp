#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dpfed::metrics {

/// counts[t][p]: samples of true class t predicted as class p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted);
  std::uint64_t total() const { return total_; }
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Throws ValidationError on length mismatch or an index >= classes.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          std::size_t classes);

/// trace / total. Throws ValidationError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
/// Mean over classes of TP / (TP + FP); a class never predicted scores 0.
double macro_precision(const ConfusionMatrix& cm);
/// Mean over classes of TP / (TP + FN); a class never present scores 0.
double macro_recall(const ConfusionMatrix& cm);

/// Mean of the last `window` entries. Throws ValidationError when the
/// window is 0 or longer than the series.
double tail_average(std::span<const double> series, std::size_t window);

/// Grid with a header row of class names; each row starts with the true
/// class name.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                         const std::vector<std::string>& class_names);

}  // namespace dpfed::metrics
