#include <gtest/gtest.h>

#include <sstream>

#include "dpfed/error.hpp"
#include "dpfed/metrics.hpp"

namespace dpfed::metrics {
namespace {

const std::vector<int> kLabels{0, 0, 0, 1, 1, 2, 2, 3, 4, 4};
const std::vector<int> kPreds{0, 0, 1, 1, 1, 2, 0, 3, 4, 2};

TEST(Metrics, HandWorkedConfusion) {
  const auto cm = confusion(kPreds, kLabels, 5);
  EXPECT_EQ(cm.total(), 10u);
  EXPECT_EQ(cm.trace(), 7u);
  EXPECT_EQ(cm.at(0, 0), 2u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(2, 0), 1u);
  EXPECT_EQ(cm.at(4, 2), 1u);
  EXPECT_EQ(cm.row_sum(0), 3u);
  EXPECT_EQ(cm.column_sum(2), 2u);
}

TEST(Metrics, HandWorkedScores) {
  const auto cm = confusion(kPreds, kLabels, 5);
  EXPECT_DOUBLE_EQ(accuracy(cm), 0.7);
  EXPECT_DOUBLE_EQ(macro_precision(cm), 23.0 / 30.0);
  EXPECT_DOUBLE_EQ(macro_recall(cm), 11.0 / 15.0);
}

TEST(Metrics, AbsentClassesScoreZero) {
  const auto cm = confusion(std::vector<int>{0, 0}, std::vector<int>{0, 1}, 5);
  EXPECT_DOUBLE_EQ(accuracy(cm), 0.5);
  EXPECT_DOUBLE_EQ(macro_precision(cm), 0.1);
  EXPECT_DOUBLE_EQ(macro_recall(cm), 0.2);
}

TEST(Metrics, PerfectPredictions) {
  const auto cm = confusion(kLabels, kLabels, 5);
  EXPECT_EQ(accuracy(cm), 1.0);
  EXPECT_EQ(macro_precision(cm), 1.0);
  EXPECT_EQ(macro_recall(cm), 1.0);
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(confusion(std::vector<int>{0}, std::vector<int>{0, 1}, 5), ValidationError);
  EXPECT_THROW(confusion(std::vector<int>{5}, std::vector<int>{0}, 5), ValidationError);
  EXPECT_THROW(confusion(std::vector<int>{-1}, std::vector<int>{0}, 5), ValidationError);
  EXPECT_THROW(accuracy(ConfusionMatrix(5)), ValidationError);
}

TEST(Metrics, TailAverage) {
  const std::vector<double> s{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(tail_average(s, 2), 4.5);
  EXPECT_DOUBLE_EQ(tail_average(s, 5), 3.0);
  EXPECT_THROW(tail_average(s, 0), ValidationError);
  EXPECT_THROW(tail_average(s, 6), ValidationError);
}

TEST(Metrics, ConfusionCsv) {
  ConfusionMatrix cm(2);
  cm.add(0, 0);
  cm.add(0, 1);
  cm.add(1, 1);
  std::ostringstream out;
  write_confusion_csv(out, cm, {"a", "b"});
  EXPECT_EQ(out.str(), "true\\predicted,a,b\na,1,1\nb,0,1\n");
  EXPECT_THROW(write_confusion_csv(out, cm, {"a"}), ValidationError);
}

}  // namespace
}  // namespace dpfed::metrics
