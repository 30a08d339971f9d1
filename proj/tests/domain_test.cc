#include "tpis/domain.h"

#include <gtest/gtest.h>

#include <set>

#include "test_util.h"

namespace tpis {
namespace {

using testing::RandomStepOne;
using testing::RandomStepTwo;

PatientRecord FullRecord(Rng& rng) {
  PatientRecord r;
  r.id = "a";
  r.step1 = RandomStepOne(rng);
  r.step2 = RandomStepTwo(rng);
  r.label = Label::kTuberculosis;
  return r;
}

TEST(LabelTest, CodesRoundTrip) {
  EXPECT_EQ(LabelCode(Label::kTuberculosis), "TB");
  EXPECT_EQ(LabelCode(Label::kPneumonia), "P");
  EXPECT_EQ(ParseLabel("TB"), Label::kTuberculosis);
  EXPECT_EQ(ParseLabel("P"), Label::kPneumonia);
  EXPECT_FALSE(ParseLabel("TBC").has_value());
  EXPECT_FALSE(ParseLabel("").has_value());
}

TEST(FeatureNamesTest, BlockSizesAndLookup) {
  EXPECT_EQ(kStepOneFeatureNames.size(), 18u);
  EXPECT_EQ(kStepTwoFeatureNames.size(), 10u);
  EXPECT_EQ(StepOneIndex("age"), 0u);
  EXPECT_EQ(StepOneIndex("orthopnea"), 17u);
  EXPECT_EQ(StepTwoIndex("white_spots_cxr"), 9u);
  EXPECT_FALSE(StepOneIndex("wbc").has_value());
  EXPECT_FALSE(IsStepOneBinary(0));
  EXPECT_TRUE(IsStepOneBinary(1));
  EXPECT_FALSE(IsStepTwoBinary(7));
  EXPECT_TRUE(IsStepTwoBinary(8));
}

TEST(SelectFeaturesTest, Lengths) {
  Rng rng(1);
  const PatientRecord r = FullRecord(rng);
  const std::vector<double> meta(5, 0.5);
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs1).size(), 18u);
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs2).size(), 10u);
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs3, meta).size(), 5u);
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs4, meta).size(), 15u);
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs5).size(), 28u);
}

TEST(SelectFeaturesTest, ColumnOrder) {
  Rng rng(2);
  const PatientRecord r = FullRecord(rng);
  const std::vector<double> meta = {0.1, 0.2, 0.3};
  const auto fs4 = SelectFeatures(r, FeatureSet::kFs4, meta);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(fs4[i], r.step2->values[i]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(fs4[10 + i], meta[i]);
  const auto fs5 = SelectFeatures(r, FeatureSet::kFs5);
  for (std::size_t i = 0; i < 18; ++i) EXPECT_EQ(fs5[i], r.step1.values[i]);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(fs5[18 + i], r.step2->values[i]);
}

TEST(SelectFeaturesTest, MetaFeaturesRequired) {
  Rng rng(3);
  const PatientRecord r = FullRecord(rng);
  EXPECT_TPIS_ERROR(SelectFeatures(r, FeatureSet::kFs3), ErrorCode::kMissingMetaFeatures);
  EXPECT_TPIS_ERROR(SelectFeatures(r, FeatureSet::kFs4), ErrorCode::kMissingMetaFeatures);
}

TEST(SelectFeaturesTest, StepTwoRequired) {
  Rng rng(4);
  PatientRecord r = FullRecord(rng);
  r.step2.reset();
  EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs1).size(), 18u);
  EXPECT_TPIS_ERROR(SelectFeatures(r, FeatureSet::kFs2), ErrorCode::kStepTwoUnavailable);
  EXPECT_TPIS_ERROR(SelectFeatures(r, FeatureSet::kFs5), ErrorCode::kStepTwoUnavailable);
}

TEST(SelectFeaturesTest, MissingPreserved) {
  Rng rng(5);
  PatientRecord r = FullRecord(rng);
  r.step1.values[3] = kMissing;
  r.step2->values[6] = kMissing;
  const auto v = SelectFeatures(r, FeatureSet::kFs5);
  EXPECT_TRUE(IsMissing(v[3]));
  EXPECT_TRUE(IsMissing(v[18 + 6]));
}

TEST(SelectFeaturesTest, Fs4LengthIsFs2PlusMetaCount) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const PatientRecord r = FullRecord(rng);
    const std::size_t m = 1 + rng.UniformIndex(9);
    const std::vector<double> meta(m, rng.Uniform());
    EXPECT_EQ(SelectFeatures(r, FeatureSet::kFs4, meta).size(),
              SelectFeatures(r, FeatureSet::kFs2).size() + m);
  }
}

TEST(SelectFeaturesTest, Deterministic) {
  Rng rng(7);
  PatientRecord r = FullRecord(rng);
  r.step1.values[0] = kMissing;
  const std::vector<double> meta = {0.4, 0.6};
  const auto a = SelectFeatures(r, FeatureSet::kFs4, meta);
  const auto b = SelectFeatures(r, FeatureSet::kFs4, meta);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(SameValue(a[i], b[i]));
}

TEST(FeatureSetTest, NameSetsUnion) {
  const auto as_set = [](const std::vector<std::string>& v) {
    return std::set<std::string>(v.begin(), v.end());
  };
  auto fs2 = as_set(FeatureNames(FeatureSet::kFs2, 5));
  auto fs3 = as_set(FeatureNames(FeatureSet::kFs3, 5));
  auto fs1 = as_set(FeatureNames(FeatureSet::kFs1, 5));
  std::set<std::string> u23 = fs2, u12 = fs1;
  u23.insert(fs3.begin(), fs3.end());
  u12.insert(fs2.begin(), fs2.end());
  EXPECT_EQ(as_set(FeatureNames(FeatureSet::kFs4, 5)), u23);
  EXPECT_EQ(as_set(FeatureNames(FeatureSet::kFs5, 5)), u12);
  EXPECT_EQ(FeatureNames(FeatureSet::kFs3, 2), (std::vector<std::string>{"meta2_0", "meta2_1"}));
}

TEST(FeatureSetTest, ParseAndFlags) {
  for (auto fs : {FeatureSet::kFs1, FeatureSet::kFs2, FeatureSet::kFs3, FeatureSet::kFs4,
                  FeatureSet::kFs5}) {
    EXPECT_EQ(ParseFeatureSet(FeatureSetName(fs)), fs);
  }
  EXPECT_FALSE(ParseFeatureSet("FS6").has_value());
  EXPECT_TRUE(RequiresMetaFeatures(FeatureSet::kFs3));
  EXPECT_TRUE(RequiresMetaFeatures(FeatureSet::kFs4));
  EXPECT_FALSE(RequiresMetaFeatures(FeatureSet::kFs5));
  EXPECT_TRUE(RequiresStepTwo(FeatureSet::kFs2));
  EXPECT_FALSE(RequiresStepTwo(FeatureSet::kFs1));
}

TEST(ValidateRecordTest, Domains) {
  Rng rng(8);
  PatientRecord r = FullRecord(rng);
  EXPECT_NO_THROW(ValidateRecord(r));
  r.step1.values[0] = kMissing;
  EXPECT_NO_THROW(ValidateRecord(r));
  r.step1.values[0] = 131;
  EXPECT_TPIS_ERROR(ValidateRecord(r), ErrorCode::kInvalidArgument);
  r.step1.values[0] = 40;
  r.step1.values[5] = 2;
  EXPECT_TPIS_ERROR(ValidateRecord(r), ErrorCode::kInvalidArgument);
  r.step1.values[5] = 1;
  r.step2->values[9] = 0.5;
  EXPECT_TPIS_ERROR(ValidateRecord(r), ErrorCode::kInvalidArgument);
  r.step2->values[9] = 1;
  r.step2->values[0] = std::numeric_limits<double>::infinity();
  EXPECT_TPIS_ERROR(ValidateRecord(r), ErrorCode::kInvalidArgument);
}

TEST(ValidateDatasetTest, DuplicateIds) {
  Rng rng(9);
  Dataset d = {FullRecord(rng), FullRecord(rng)};
  d[1].id = "b";
  EXPECT_NO_THROW(ValidateDataset(d));
  d[1].id = "a";
  EXPECT_TPIS_ERROR(ValidateDataset(d), ErrorCode::kInvalidArgument);
}

TEST(ConfusionMatrixTest, Total) {
  ConfusionMatrix cm{3, 1, 1, 5};
  EXPECT_EQ(cm.total(), 10u);
}

}  // namespace
}  // namespace tpis
