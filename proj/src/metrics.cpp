#include "dpfed/metrics.hpp"

#include <ostream>
#include <string>

#include "dpfed/error.hpp"

namespace dpfed::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ValidationError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) {
    throw ValidationError("class index out of range for a " + std::to_string(classes_) +
                          "-class confusion matrix");
  }
  ++counts_[truth * classes_ + predicted];
  ++total_;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += at(i, i);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += at(t, predicted);
  return s;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          std::size_t classes) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("confusion: " + std::to_string(predictions.size()) +
                          " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0) {
      throw ValidationError("confusion: negative class index");
    }
    cm.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(predictions[i]));
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

double macro_precision(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("precision of an empty confusion matrix");
  double sum = 0.0;
  for (std::size_t m = 0; m < cm.classes(); ++m) {
    const auto predicted = cm.column_sum(m);
    if (predicted > 0) sum += static_cast<double>(cm.at(m, m)) / static_cast<double>(predicted);
  }
  return sum / static_cast<double>(cm.classes());
}

double macro_recall(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("recall of an empty confusion matrix");
  double sum = 0.0;
  for (std::size_t m = 0; m < cm.classes(); ++m) {
    const auto present = cm.row_sum(m);
    if (present > 0) sum += static_cast<double>(cm.at(m, m)) / static_cast<double>(present);
  }
  return sum / static_cast<double>(cm.classes());
}

double tail_average(std::span<const double> series, std::size_t window) {
  if (window == 0 || window > series.size()) {
    throw ValidationError("tail window " + std::to_string(window) +
                          " does not fit a series of length " + std::to_string(series.size()));
  }
  double sum = 0.0;
  for (std::size_t i = series.size() - window; i < series.size(); ++i) sum += series[i];
  return sum / static_cast<double>(window);
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                         const std::vector<std::string>& class_names) {
  if (class_names.size() != cm.classes()) {
    throw ValidationError("confusion export needs one name per class");
  }
  out << "true\\predicted";
  for (const auto& name : class_names) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    out << class_names[t];
    for (std::size_t p = 0; p < cm.classes(); ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

}  // namespace dpfed::metrics
