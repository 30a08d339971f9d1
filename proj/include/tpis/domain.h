#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpis/matrix.h"

namespace tpis {

// TB is the positive class, pneumonia the negative one.
enum class Label { kPneumonia = 0, kTuberculosis = 1 };

// "TB" / "P", the codes used in dataset files and service bodies.
std::string_view LabelCode(Label label);
std::optional<Label> ParseLabel(std::string_view code);

inline constexpr std::size_t kStepOneFeatureCount = 18;
inline constexpr std::size_t kStepTwoFeatureCount = 10;

// Column order of the step-1 block. Index 0 is age (years); every other
// column is binary with 1 = Yes / Abnormal / Male and 0 = No / Normal / Female.
inline constexpr std::array<std::string_view, kStepOneFeatureCount>
    kStepOneFeatureNames = {
        "age",       "gender",    "cough",       "sputum",
        "bloody_sputum", "fever", "shaking",     "smoking",
        "joint_pain", "edema",    "asthma",      "diabetes",
        "cyanosis",  "weight_loss", "weakness",  "lung_sound_abnormal",
        "dyspnea",   "orthopnea",
};

// Column order of the step-2 block: eight laboratory values followed by two
// binary keywords from the chest X-ray report.
inline constexpr std::array<std::string_view, kStepTwoFeatureCount>
    kStepTwoFeatureNames = {
        "wbc",        "hemoglobin", "hematocrit", "neutrophil",
        "lymphocyte", "mcv",        "crp",        "esr",
        "lung_abnormalities_cxr", "white_spots_cxr",
};

inline bool IsStepOneBinary(std::size_t column) { return column >= 1; }
inline bool IsStepTwoBinary(std::size_t column) { return column >= 8; }

inline constexpr double kMaxAge = 130.0;

std::optional<std::size_t> StepOneIndex(std::string_view name);
std::optional<std::size_t> StepTwoIndex(std::string_view name);

struct StepOneFeatures {
  std::array<double, kStepOneFeatureCount> values;

  StepOneFeatures() { values.fill(kMissing); }

  bool Complete() const;
  friend bool operator==(const StepOneFeatures& a, const StepOneFeatures& b);
};

struct StepTwoFeatures {
  std::array<double, kStepTwoFeatureCount> values;

  StepTwoFeatures() { values.fill(kMissing); }

  bool Complete() const;
  friend bool operator==(const StepTwoFeatures& a, const StepTwoFeatures& b);
};

struct PatientRecord {
  std::string id;
  StepOneFeatures step1;
  // Absent when the patient never had laboratory tests / chest X-ray.
  std::optional<StepTwoFeatures> step2;
  std::optional<Label> label;

  friend bool operator==(const PatientRecord& a, const PatientRecord& b) = default;
};

using Dataset = std::vector<PatientRecord>;

// Checks value domains: binaries in {0, 1, missing}, age in [0, 130], lab
// values finite. Throws kInvalidArgument naming the record and field.
void ValidateRecord(const PatientRecord& record);

// ValidateRecord on every row plus id uniqueness.
void ValidateDataset(const Dataset& dataset);

std::vector<Label> Labels(const Dataset& dataset);

// Feature sets:
//   FS1  step-1 block (symptoms + demographics)
//   FS2  step-2 block (labs + CXR keywords)
//   FS3  meta-features from the second step-1 layer
//   FS4  FS2 followed by FS3
//   FS5  FS1 followed by FS2
enum class FeatureSet { kFs1, kFs2, kFs3, kFs4, kFs5 };

std::string_view FeatureSetName(FeatureSet fs);
std::optional<FeatureSet> ParseFeatureSet(std::string_view name);
bool RequiresMetaFeatures(FeatureSet fs);
bool RequiresStepTwo(FeatureSet fs);

// Column names of a feature set, in the order SelectFeatures emits them.
// Meta-feature columns are named meta2_0 .. meta2_{meta_count-1}.
std::vector<std::string> FeatureNames(FeatureSet fs, std::size_t meta_count);

// Concatenates the record's features for `fs`. Missing cells stay kMissing.
// Throws kMissingMetaFeatures when `fs` needs meta-features and none are
// given, and kStepTwoUnavailable when it needs step-2 data the record lacks.
std::vector<double> SelectFeatures(
    const PatientRecord& record, FeatureSet fs,
    std::optional<std::span<const double>> meta2 = std::nullopt);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

}  // namespace tpis
