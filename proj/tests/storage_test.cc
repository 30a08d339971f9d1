#include "tpis/storage.h"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "test_util.h"

namespace tpis {
namespace {

using testing::Cohort199;
using testing::DefaultModel;

std::string Header() {
  std::string h;
  for (const auto& c : DatasetColumns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

// A data row with the given id/label and every feature field set to `cell`.
std::string Row(const std::string& id, const std::string& label, const std::string& cell = "1") {
  std::string r = id + "," + label + ",40";
  for (std::size_t i = 1; i < kStepOneFeatureCount + kStepTwoFeatureCount; ++i) r += "," + cell;
  return r;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("tpis_storage_" + std::to_string(::getpid()) + "_" + name);
}

TEST(DatasetCsvTest, Columns) {
  const auto cols = DatasetColumns();
  ASSERT_EQ(cols.size(), 2 + kStepOneFeatureCount + kStepTwoFeatureCount);
  EXPECT_EQ(cols[0], "id");
  EXPECT_EQ(cols[1], "label");
  EXPECT_EQ(cols[2], "age");
  EXPECT_EQ(cols.back(), "white_spots_cxr");
}

TEST(DatasetCsvTest, RoundTripCohort) {
  const std::string text = FormatDatasetCsv(Cohort199());
  EXPECT_EQ(ParseDatasetCsv(text), Cohort199());
  EXPECT_EQ(FormatDatasetCsv(ParseDatasetCsv(text)), text);
}

TEST(DatasetCsvTest, RoundTripAwkwardValues) {
  Dataset d(2);
  d[0].id = "a,\"quoted\"\nid";
  d[0].label = Label::kTuberculosis;
  d[0].step1.values[0] = 33;
  d[0].step2.emplace();
  d[0].step2->values[0] = 0.1 + 0.2;
  d[0].step2->values[7] = 1e-300;
  d[1].id = "b";  // unlabeled, no step 2, all missing
  EXPECT_EQ(ParseDatasetCsv(FormatDatasetCsv(d)), d);
}

TEST(DatasetCsvTest, CrlfBomAndBlankLabels) {
  const std::string text = "\xEF\xBB\xBF" + Header() + "\r\n" + Row("x1", "TB") + "\r\n" +
                           Row("x2", "") + "\r\n";
  const Dataset d = ParseDatasetCsv(text);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].label, Label::kTuberculosis);
  EXPECT_FALSE(d[1].label.has_value());
  EXPECT_EQ(d[0].step1.values[0], 40.0);
}

TEST(DatasetCsvTest, EmptyStepTwoFieldsMeanNoStepTwo) {
  std::string row = "x1,P,40";
  for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) row += ",0";
  for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) row += ",";
  const Dataset d = ParseDatasetCsv(Header() + "\n" + row + "\n");
  EXPECT_FALSE(d[0].step2.has_value());
}

void ExpectCellError(const std::string& text, const std::string& fragment) {
  try {
    ParseDatasetCsv(text);
    ADD_FAILURE() << "expected CellError containing " << fragment;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCellError);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(DatasetCsvTest, CellErrors) {
  const std::string h = Header() + "\n" + Row("ok", "P") + "\n";
  std::string bad_number = Row("x", "P");
  bad_number.replace(bad_number.find(",40,"), 4, ",4o,");
  ExpectCellError(h + bad_number + "\n", "line 3, column age");
  ExpectCellError(h + Row("x", "P", "2") + "\n", "line 3, column gender");
  ExpectCellError(h + Row("x", "maybe") + "\n", "column label");
  ExpectCellError(h + Row("ok", "P") + "\n", "duplicate id");
  ExpectCellError(h + Row("", "P") + "\n", "empty id");
  ExpectCellError(h + "x,P,40\n", "line 3");
  ExpectCellError(h + "\"unterminated,P\n", "unterminated");
  std::string old = Row("x", "P");
  old.replace(old.find(",40,"), 4, ",140,");
  ExpectCellError(h + old + "\n", "age outside");
}

TEST(DatasetCsvTest, SchemaErrors) {
  EXPECT_TPIS_ERROR(ParseDatasetCsv(""), ErrorCode::kSchemaError);
  std::string swapped = Header();
  swapped.replace(swapped.find("cough,sputum"), 12, "sputum,cough");
  EXPECT_TPIS_ERROR(ParseDatasetCsv(swapped + "\n"), ErrorCode::kSchemaError);
  EXPECT_TPIS_ERROR(ParseDatasetCsv(Header() + ",extra\n"), ErrorCode::kSchemaError);
  std::string missing = Header();
  missing.erase(missing.find(",esr"), 4);
  try {
    ParseDatasetCsv(missing + "\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaError);
    EXPECT_NE(std::string(e.what()).find("esr"), std::string::npos) << e.what();
  }
}

TEST(DatasetFileTest, WriteReadAndIoErrors) {
  const auto path = TempPath("cohort.csv");
  WriteDataset(Cohort199(), path.string());
  EXPECT_EQ(ReadDataset(path.string()), Cohort199());
  std::filesystem::remove(path);
  EXPECT_TPIS_ERROR(ReadDataset(path.string()), ErrorCode::kIoError);
  EXPECT_TPIS_ERROR(WriteDataset(Cohort199(), "/nonexistent-dir/x.csv"), ErrorCode::kIoError);
}

TEST(ModelArchiveTest, RoundTripPredictionsAreIdentical) {
  const TpisModel& m = DefaultModel();
  const TpisModel back = DeserializeModel(SerializeModel(m));
  Rng rng(71);
  for (int i = 0; i < 100; ++i) {
    StepOneFeatures f1 = testing::RandomStepOne(rng);
    StepTwoFeatures f2 = testing::RandomStepTwo(rng);
    if (i % 4 == 0) f1.values[rng.UniformIndex(kStepOneFeatureCount)] = kMissing;
    if (i % 5 == 0) f2.values[rng.UniformIndex(kStepTwoFeatureCount)] = kMissing;
    const EarlyDiagnosis a = EarlyDiagnose(m, f1);
    const EarlyDiagnosis b = EarlyDiagnose(back, f1);
    EXPECT_EQ(a.meta1, b.meta1);
    EXPECT_EQ(a.meta2, b.meta2);
    EXPECT_EQ(a.cs, b.cs);
    EXPECT_EQ(FinalDiagnose(m, a.meta2, f2).votes, FinalDiagnose(back, b.meta2, f2).votes);
  }
  EXPECT_EQ(back.policy, m.policy);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.folds, m.folds);
}

TEST(ModelArchiveTest, SavingTwiceGivesIdenticalBytes) {
  const std::string a = SerializeModel(DefaultModel());
  EXPECT_EQ(SerializeModel(DeserializeModel(a)), a);
  const auto p1 = TempPath("m1.json"), p2 = TempPath("m2.json");
  SaveModel(DefaultModel(), p1.string());
  SaveModel(LoadModel(p1.string()), p2.string());
  EXPECT_EQ(ReadTextFile(p1.string()), ReadTextFile(p2.string()));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(ModelArchiveTest, TruncatedArchive) {
  const std::string a = SerializeModel(DefaultModel());
  EXPECT_TPIS_ERROR(DeserializeModel(a.substr(0, a.size() / 2)), ErrorCode::kArchiveError);
  EXPECT_TPIS_ERROR(DeserializeModel(""), ErrorCode::kArchiveError);
  EXPECT_TPIS_ERROR(DeserializeModel("[1, 2]"), ErrorCode::kArchiveError);
}

TEST(ModelArchiveTest, FutureVersionNamesBothVersions) {
  nlohmann::json j = ModelToJson(DefaultModel());
  EXPECT_EQ(j["format_version"], kModelFormatVersion);
  j["format_version"] = 2;
  try {
    ModelFromJson(j);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("format_version 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("format_version 1"), std::string::npos) << msg;
  }
}

TEST(ModelArchiveTest, InconsistentArchive) {
  nlohmann::json j = ModelToJson(DefaultModel());
  j["manifest"]["step1_features"][0] = "height";
  EXPECT_TPIS_ERROR(ModelFromJson(j), ErrorCode::kArchiveError);
  j = ModelToJson(DefaultModel());
  j["layers"].erase("layer2");
  EXPECT_TPIS_ERROR(ModelFromJson(j), ErrorCode::kArchiveError);
  j = ModelToJson(DefaultModel());
  j["seed"] = "seven";
  EXPECT_TPIS_ERROR(ModelFromJson(j), ErrorCode::kArchiveError);
}

TEST(ModelArchiveTest, MissingFile) {
  EXPECT_TPIS_ERROR(LoadModel("/nonexistent/model.json"), ErrorCode::kIoError);
}

}  // namespace
}  // namespace tpis
