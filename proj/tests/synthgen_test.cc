#include "tpis/synthgen.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace tpis {
namespace {

std::size_t Step1(std::string_view name) { return *StepOneIndex(name); }
std::size_t Step2(std::string_view name) { return *StepTwoIndex(name); }

TEST(DefaultSpecTest, KnownValues) {
  const CohortSpec s = DefaultSpec();
  EXPECT_EQ(s.version, 1);
  EXPECT_EQ(s.pneumonia.count, 119);
  EXPECT_EQ(s.tuberculosis.count, 80);
  EXPECT_NEAR(s.Prevalence(Label::kTuberculosis), 80.0 / 199.0, 1e-12);
  const NumericMarginal& age = s.pneumonia.step1[0].numeric;
  EXPECT_EQ(age.min, 15);
  EXPECT_EQ(age.mean, 61.11);
  EXPECT_EQ(age.max, 102);
  EXPECT_EQ(age.std, 23.77);
  EXPECT_NEAR(s.pneumonia.step1[Step1("cough")].yes_rate, 112.0 / 119.0, 1e-12);
  EXPECT_EQ(s.pneumonia.step1[Step1("joint_pain")].yes_rate, 0.0);
  EXPECT_NEAR(s.pneumonia.step2[Step2("lung_abnormalities_cxr")].yes_rate, 109.0 / 110.0, 1e-12);
  EXPECT_EQ(s.pneumonia.step2[Step2("wbc")].missing_rate, 0.05);
  EXPECT_EQ(s.pneumonia.step1[Step1("fever")].missing_rate, 0.0);
  EXPECT_NO_THROW(ValidateCohortSpec(s));
}

TEST(DefaultSpecTest, ShippedFileMatchesEmbeddedCopy) {
  EXPECT_EQ(LoadCohortSpec(std::string(TPIS_SOURCE_DIR) + "/data/cohort_spec.json"),
            DefaultSpec());
}

nlohmann::json MinimalSpecJson() {
  nlohmann::json cls;
  cls["count"] = 50;
  cls["numeric"]["age"] = {{"min", 20}, {"mean", 50}, {"median", 50}, {"max", 80}, {"std", 10}};
  for (std::size_t i = 0; i < 8; ++i) {
    cls["numeric"][std::string(kStepTwoFeatureNames[i])] = {
        {"min", 0}, {"mean", 5}, {"median", 5}, {"max", 10}, {"std", 2}};
  }
  for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) {
    cls["binary"][std::string(kStepOneFeatureNames[i])] = {{"rate", 0.5}};
  }
  for (std::size_t i = 8; i < kStepTwoFeatureCount; ++i) {
    cls["binary"][std::string(kStepTwoFeatureNames[i])] = {{"yes", 3}, {"no", 1}};
  }
  nlohmann::json doc;
  doc["format"] = "tpis-cohort-spec";
  doc["version"] = 1;
  doc["classes"]["P"] = cls;
  doc["classes"]["TB"] = cls;
  return doc;
}

TEST(ParseCohortSpecTest, MinimalDocument) {
  const CohortSpec s = ParseCohortSpec(MinimalSpecJson());
  EXPECT_EQ(s.tuberculosis.step2[Step2("white_spots_cxr")].yes_rate, 0.75);
  EXPECT_EQ(s.tuberculosis.step1[Step1("gender")].yes_rate, 0.5);
  EXPECT_EQ(s.Prevalence(Label::kPneumonia), 0.5);
}

TEST(ParseCohortSpecTest, Rejections) {
  auto expect_spec_error = [](nlohmann::json doc, const char* what) {
    SCOPED_TRACE(what);
    EXPECT_TPIS_ERROR(ParseCohortSpec(doc), ErrorCode::kSpecError);
  };
  nlohmann::json d = MinimalSpecJson();
  d["classes"]["P"]["numeric"].erase("wbc");
  expect_spec_error(d, "missing feature");
  d = MinimalSpecJson();
  d["classes"]["P"]["numeric"]["platelets"] = d["classes"]["P"]["numeric"]["wbc"];
  expect_spec_error(d, "unknown feature");
  d = MinimalSpecJson();
  d["classes"]["P"]["numeric"]["wbc"]["min"] = 6;
  expect_spec_error(d, "median below min");
  d = MinimalSpecJson();
  d["classes"]["P"]["binary"]["cough"] = {{"rate", 1.5}};
  expect_spec_error(d, "rate above one");
  d = MinimalSpecJson();
  d["classes"]["TB"]["count"] = 0;
  expect_spec_error(d, "zero count");
  d = MinimalSpecJson();
  d["version"] = 2;
  expect_spec_error(d, "version");
  d = MinimalSpecJson();
  d["classes"]["P"]["numeric"]["age"]["std"] = -1;
  expect_spec_error(d, "negative std");
  d = MinimalSpecJson();
  d["classes"]["P"]["missing"] = {{"crp", 2.0}};
  expect_spec_error(d, "missing rate");
  EXPECT_TPIS_ERROR(ParseCohortSpec(std::string_view("{not json")), ErrorCode::kSpecError);
}

TEST(LoadCohortSpecTest, MissingFile) {
  EXPECT_TPIS_ERROR(LoadCohortSpec("/nonexistent/spec.json"), ErrorCode::kIoError);
}

TEST(SampleCohortTest, SizeIdsAndDeterminism) {
  const Dataset a = SampleCohort(DefaultSpec(), 199, 7, true);
  ASSERT_EQ(a.size(), 199u);
  EXPECT_EQ(a[0].id, "pt-00001");
  EXPECT_EQ(a[198].id, "pt-00199");
  EXPECT_NO_THROW(ValidateDataset(a));
  EXPECT_EQ(a, SampleCohort(DefaultSpec(), 199, 7, true));
  EXPECT_NE(a, SampleCohort(DefaultSpec(), 199, 8, true));
}

TEST(SampleCohortTest, TooSmall) {
  EXPECT_TPIS_ERROR(SampleCohort(DefaultSpec(), 9, 1, true), ErrorCode::kInvalidArgument);
  EXPECT_EQ(SampleCohort(DefaultSpec(), 10, 1, true).size(), 10u);
}

TEST(SampleCohortTest, TbFractionNearPrevalence) {
  const double prevalence = DefaultSpec().Prevalence(Label::kTuberculosis);
  std::size_t within = 0;
  const std::size_t trials = 200;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    std::size_t tb = 0;
    for (const auto& r : SampleCohort(DefaultSpec(), 199, seed, true)) {
      tb += *r.label == Label::kTuberculosis;
    }
    within += std::abs(double(tb) / 199.0 - prevalence) <= 0.07;
  }
  // Binomial(199, 0.40): P(|f - p| <= 0.07) is about 0.96.
  EXPECT_GE(double(within) / trials, 0.93);
}

TEST(SampleCohortTest, LargeSampleMatchesRates) {
  const CohortSpec spec = DefaultSpec();
  const std::size_t n = 100000;
  const Dataset d = SampleCohort(spec, n, 3, true);
  for (Label label : {Label::kPneumonia, Label::kTuberculosis}) {
    const ClassSpec& cls = spec.of(label);
    std::size_t count = 0;
    std::array<std::size_t, kStepOneFeatureCount> yes1{}, seen1{};
    std::array<std::size_t, kStepTwoFeatureCount> yes2{}, seen2{}, missing2{};
    for (const auto& r : d) {
      if (*r.label != label) continue;
      ++count;
      for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
        if (IsMissing(r.step1.values[i])) continue;
        ++seen1[i];
        yes1[i] += r.step1.values[i] == 1.0;
      }
      for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
        const double v = r.step2 ? r.step2->values[i] : kMissing;
        if (IsMissing(v)) {
          ++missing2[i];
          continue;
        }
        ++seen2[i];
        yes2[i] += v == 1.0;
      }
    }
    EXPECT_NEAR(double(count) / n, spec.Prevalence(label), 0.01);
    for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) {
      EXPECT_NEAR(double(yes1[i]) / seen1[i], cls.step1[i].yes_rate, 0.01) << kStepOneFeatureNames[i];
    }
    for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
      EXPECT_NEAR(double(missing2[i]) / count, cls.step2[i].missing_rate, 0.01)
          << kStepTwoFeatureNames[i];
      if (IsStepTwoBinary(i)) {
        EXPECT_NEAR(double(yes2[i]) / seen2[i], cls.step2[i].yes_rate, 0.01)
            << kStepTwoFeatureNames[i];
      }
    }
  }
}

TEST(SampleCohortTest, ValuesWithinSpecBounds) {
  const CohortSpec spec = DefaultSpec();
  for (const auto& r : SampleCohort(spec, 5000, 4, false)) {
    const ClassSpec& cls = spec.of(*r.label);
    ASSERT_TRUE(r.step1.Complete());
    ASSERT_TRUE(r.step2.has_value());
    ASSERT_TRUE(r.step2->Complete());
    const double age = r.step1.values[0];
    EXPECT_EQ(age, std::round(age));
    EXPECT_GE(age, std::floor(cls.step1[0].numeric.min));
    EXPECT_LE(age, std::ceil(cls.step1[0].numeric.max));
    for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) {
      EXPECT_TRUE(r.step1.values[i] == 0.0 || r.step1.values[i] == 1.0);
    }
    for (std::size_t i = 0; i < 8; ++i) {
      const double v = r.step2->values[i];
      EXPECT_GE(v, cls.step2[i].numeric.min - 0.005) << kStepTwoFeatureNames[i];
      EXPECT_LE(v, cls.step2[i].numeric.max + 0.005) << kStepTwoFeatureNames[i];
      EXPECT_NEAR(v * 100, std::round(v * 100), 1e-6);
    }
  }
}

TEST(SampleCohortTest, ZeroMissingRateNeverMasks) {
  for (const auto& r : SampleCohort(DefaultSpec(), 2000, 5, true)) {
    for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
      if (DefaultSpec().of(*r.label).step1[i].missing_rate == 0.0) {
        EXPECT_FALSE(IsMissing(r.step1.values[i]));
      }
    }
  }
}

TEST(SampleCohortTest, AllMissingStepTwoBecomesAbsent) {
  CohortSpec spec = DefaultSpec();
  for (auto* cls : {&spec.pneumonia, &spec.tuberculosis}) {
    for (auto& f : cls->step2) f.missing_rate = 1.0;
  }
  for (const auto& r : SampleCohort(spec, 50, 6, true)) EXPECT_FALSE(r.step2.has_value());
}

}  // namespace
}  // namespace tpis
