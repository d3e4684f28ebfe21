#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "learn2mix/csv.hpp"
#include "learn2mix/data.hpp"
#include "learn2mix/errors.hpp"

using namespace l2m;

namespace {

Sample make_sample(double x, std::size_t c) { return {Eigen::VectorXd::Constant(2, x), Eigen::VectorXd::Constant(1, x), c}; }

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Dataset, ProportionsAndSizes) {
  ClassPartitionedDataset ds({{make_sample(0, 0), make_sample(1, 0), make_sample(2, 0)}, {make_sample(3, 1)}});
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.num_classes(), 2u);
  EXPECT_DOUBLE_EQ(ds.fixed_proportions()[0], 0.75);
  EXPECT_DOUBLE_EQ(ds.fixed_proportions()[1], 0.25);
  EXPECT_EQ(ds.class_sizes(), (std::vector<std::size_t>{3, 1}));
}

TEST(Dataset, RejectsEmptyClassAndMismatches) {
  EXPECT_THROW(ClassPartitionedDataset({{make_sample(0, 0)}, {}}), EmptyClass);
  EXPECT_THROW(ClassPartitionedDataset({{make_sample(0, 1)}}), InvalidSize);
  Sample odd{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1), 1};
  EXPECT_THROW(ClassPartitionedDataset({{make_sample(0, 0)}, {odd}}), DimensionMismatch);
}

TEST(MeanEstimation, ShapesAndDeterminism) {
  const auto [train, test] = make_mean_estimation(7);
  EXPECT_EQ(train.class_sizes(), (std::vector<std::size_t>{1000, 1000, 800, 200}));
  EXPECT_EQ(test.class_sizes(), (std::vector<std::size_t>{1000, 1000, 1000, 1000}));
  EXPECT_EQ(train.feature_dim(), 10u);
  EXPECT_EQ(train.label_dim(), 1u);
  EXPECT_EQ(make_mean_estimation(7).first, train);
  EXPECT_FALSE(make_mean_estimation(8).first == train);
}

TEST(MeanEstimation, LabelIsNearSampleMean) {
  const auto [train, test] = make_mean_estimation(3);
  double worst = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    for (const auto& s : train.store(c)) worst = std::max(worst, std::abs(s.features.mean() - s.label[0]));
  }
  // Normal and exponential draws have unit-scale spread, so sample means stay within a few units.
  EXPECT_LT(worst, 5.0);
}

TEST(Blobs, TrainAndTestStreamsDiffer) {
  const std::vector<std::size_t> counts{5, 5};
  const auto a = make_gaussian_blobs(1, 2, counts, 3, 2.0);
  const auto b = make_gaussian_blobs(1, 2, counts, 3, 2.0, StreamTag::dataset_test);
  EXPECT_FALSE(a == b);
  EXPECT_EQ(a.label_dim(), 2u);
  EXPECT_DOUBLE_EQ(a.at(1, 0).label[1], 1.0);
}

TEST(Imbalance, RetentionRecipes) {
  const auto lin = ImbalanceSpec::linear().retention(3);
  EXPECT_NEAR(lin[0], 0.9, 1e-15);
  EXPECT_NEAR(lin[2], 0.7, 1e-15);
  const auto lg = ImbalanceSpec::logarithmic().retention(2);
  EXPECT_NEAR(lg[1], 1.0 / 40.0, 1e-15);
}

TEST(Imbalance, KeepsAtLeastOne) {
  const std::vector<std::size_t> counts{100, 100};
  const auto ds = make_gaussian_blobs(1, 2, counts, 2, 1.0);
  const auto cut = apply_imbalance(ds, ImbalanceSpec::per_class({0.5, 0.0001}), 4);
  EXPECT_EQ(cut.class_sizes(), (std::vector<std::size_t>{50, 1}));
}

TEST(Csv, RoundTripAndErrors) {
  const std::vector<std::size_t> counts{3, 2};
  const auto ds = make_gaussian_blobs(2, 2, counts, 2, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "l2m_roundtrip.csv";
  write_csv(ds, path);
  const auto back = load_csv(path, "", "class");
  EXPECT_EQ(back.class_sizes(), ds.class_sizes());
  EXPECT_NEAR((back.at(1, 1).features - ds.at(1, 1).features).norm(), 0.0, 0.0);

  const auto bad = temp_file("l2m_bad.csv", "f0,label,class\n1,2,a\nx,3,b\n");
  EXPECT_THROW(load_csv(bad, "label", "class"), NonNumericFeature);
  EXPECT_THROW(load_csv(bad, "label", "missing"), MissingColumn);
  const auto ragged = temp_file("l2m_ragged.csv", "f0,label,class\n1,2\n");
  EXPECT_THROW(load_csv(ragged, "label", "class"), ParseError);
}

TEST(Csv, NumericClassOrder) {
  const auto path = temp_file("l2m_numeric.csv", "f0,class\n1,10\n2,9\n3,10\n");
  EXPECT_EQ(read_class_values(path, "class"), (std::vector<std::string>{"9", "10"}));
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) {
    EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
  }
  EXPECT_FALSE(csv::parse_double("").has_value());
  EXPECT_EQ(csv::split_record("a,\"b,c\",\"d\"\"e\"", ','), (std::vector<std::string>{"a", "b,c", "d\"e"}));
}
