#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/smote.hpp"
#include "learn2mix/train.hpp"
#include "oracles.hpp"

using namespace l2m;

namespace {

ClassPartitionedDataset blobs(std::uint64_t seed, std::vector<std::size_t> counts) {
  return make_gaussian_blobs(seed, counts.size(), counts, 3, 2.0);
}

TrainConfig quick(Strategy s, LossType loss = LossType::cross_entropy) {
  TrainConfig c;
  c.strategy = s;
  c.epochs = 6;
  c.batch_size = 20;
  c.learning_rate = 1e-2;
  c.mixing_rate = 0.2;
  c.seed = 3;
  c.loss = loss;
  c.record_time = false;
  return c;
}

}  // namespace

TEST(Strategy, Names) {
  for (auto s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(parse_strategy("is"), Strategy::importance_sampling);
  EXPECT_FALSE(parse_strategy("bogus").has_value());
  EXPECT_EQ(parse_loss("ce"), LossType::cross_entropy);
}

TEST(Config, Validation) {
  auto c = quick(Strategy::learn2mix);
  c.epochs = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = quick(Strategy::learn2mix);
  c.mixing_rate = 1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = quick(Strategy::learn2mix);
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(ClassLoss, AccumulatorAveragesBatchMeans) {
  ClassLossAccumulator acc(3);
  const std::vector<std::size_t> c1{0, 0, 1};
  Eigen::VectorXd l1(3);
  l1 << 1.0, 3.0, 5.0;
  acc.add_batch(c1, l1);
  const std::vector<std::size_t> c2{0};
  Eigen::VectorXd l2(1);
  l2 << 6.0;
  acc.add_batch(c2, l2);
  const std::vector<double> prev{0.0, 0.0, 9.0};
  const auto r = acc.result(prev);
  EXPECT_DOUBLE_EQ(r.losses[0], 4.0);  // mean of batch means 2 and 6
  EXPECT_DOUBLE_EQ(r.losses[1], 5.0);
  EXPECT_DOUBLE_EQ(r.losses[2], 9.0);
  EXPECT_FALSE(r.valid[2]);
  EXPECT_EQ(acc.batches_seen(), (std::vector<std::size_t>{2, 1, 0}));
}

TEST(Train, HistoryShape) {
  const auto ds = blobs(1, {60, 30, 10});
  const auto test = make_gaussian_blobs(1, 3, std::vector<std::size_t>{20, 20, 20}, 3, 2.0, StreamTag::dataset_test);
  for (auto s : all_strategies()) {
    const auto r = train(ds, &test, DenseNet::classifier(3, 3, 8, 2), quick(s));
    ASSERT_EQ(r.history.size(), 6u) << to_string(s);
    for (const auto& m : r.history) {
      EXPECT_TRUE(std::isfinite(m.train_loss));
      EXPECT_GE(m.train_loss, 0.0);
      EXPECT_EQ(m.alpha.size(), 3u);
      EXPECT_NEAR(std::accumulate(m.alpha.begin(), m.alpha.end(), 0.0), 1.0, 1e-12);
      EXPECT_FALSE(m.elapsed_s.has_value());
      ASSERT_TRUE(m.worst_class_accuracy.has_value());
    }
  }
}

TEST(Train, ZeroGammaKeepsFixedProportions) {
  const auto ds = blobs(2, {50, 30, 20});
  auto cfg = quick(Strategy::learn2mix);
  cfg.mixing_rate = 0.0;
  const auto r = train(ds, nullptr, DenseNet::classifier(3, 3, 8, 2), cfg);
  for (const auto& m : r.history) EXPECT_EQ(m.alpha, ds.fixed_proportions());
}

TEST(Train, ZeroGammaEqualsClassical) {
  const auto ds = blobs(4, {50, 30, 20});
  auto cfg = quick(Strategy::learn2mix);
  cfg.mixing_rate = 0.0;
  const auto a = train(ds, nullptr, DenseNet::classifier(3, 3, 8, 2), cfg);
  const auto b = train(ds, nullptr, DenseNet::classifier(3, 3, 8, 2), quick(Strategy::classical));
  EXPECT_EQ(a.net, b.net);
}

TEST(Train, SingleClassMatchesClassical) {
  const auto source = make_mean_estimation(5).first;
  const auto store = source.store(0);
  const ClassPartitionedDataset ds({std::vector<Sample>(store.begin(), store.begin() + 40)});
  const auto a = train(ds, nullptr, DenseNet::regression(10, 8, 1), quick(Strategy::learn2mix, LossType::mse));
  const auto b = train(ds, nullptr, DenseNet::regression(10, 8, 1), quick(Strategy::classical, LossType::mse));
  EXPECT_EQ(a.net, b.net);
  for (const auto& m : a.history) EXPECT_EQ(m.alpha, std::vector<double>{1.0});
}

TEST(Train, AlphaMovesTowardHarderClass) {
  const auto ds = blobs(6, {90, 9, 1});
  auto cfg = quick(Strategy::learn2mix);
  cfg.epochs = 3;
  const auto r = train(ds, nullptr, DenseNet::classifier(3, 3, 8, 2), cfg);
  EXPECT_GT(r.history.back().alpha[2], ds.fixed_proportions()[2]);
}

TEST(Train, ClassificationOnlyStrategiesRejectMse) {
  const auto ds = blobs(1, {10, 10});
  for (auto s : {Strategy::focal, Strategy::smote, Strategy::curriculum}) {
    EXPECT_THROW(train(ds, nullptr, DenseNet::regression(3, 4, 1), quick(s, LossType::mse)), UsageError);
  }
}

TEST(Evaluate, AccuracyAndWorstClass) {
  const auto ds = blobs(7, {10, 10});
  DenseNet net({3, 2}, {Activation::softmax});
  const auto e = evaluate(net, ds, CrossEntropy{});
  // Zero parameters tie every prediction, which resolves to class 0.
  EXPECT_DOUBLE_EQ(*e.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*e.worst_class_accuracy, 0.0);
  EXPECT_NEAR(e.loss, std::log(2.0), 1e-12);
}

TEST(Baselines, CurriculumPacing) {
  EXPECT_DOUBLE_EQ(curriculum_fraction(0), 0.5);
  EXPECT_DOUBLE_EQ(curriculum_fraction(9), 0.5);
  EXPECT_DOUBLE_EQ(curriculum_fraction(10), 0.6);
  EXPECT_DOUBLE_EQ(curriculum_fraction(100), 1.0);
}

TEST(Baselines, SamplingWithoutReplacement) {
  Rng rng(1);
  Eigen::VectorXd w(5);
  w << 0.0, 1.0, 0.0, 2.0, 0.0;
  auto idx = sample_without_replacement(w, 2, rng);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<std::size_t>{1, 3}));
  auto all = sample_without_replacement(w, 5, rng);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Smote, Contract) {
  const auto ds = blobs(8, {30, 7, 2, 1});
  const auto r = smote_oversample(ds, 5);
  EXPECT_EQ(r.dataset.class_sizes(), (std::vector<std::size_t>{30, 30, 30, 30}));
  EXPECT_EQ(r.synthetic.size(), 23u + 28 + 29);
  for (const auto& s : r.synthetic) {
    const auto& p = r.dataset.at(s.class_id, s.index);
    EXPECT_TRUE(oracle::on_segment(p.features, ds.at(s.class_id, s.base).features,
                                   ds.at(s.class_id, s.neighbor).features));
    EXPECT_EQ(p.class_id, s.class_id);
  }
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < ds.store(c).size(); ++i) {
      EXPECT_EQ(r.dataset.at(c, i).features, ds.at(c, i).features);
    }
  }
}
