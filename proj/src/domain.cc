#include "tpis/domain.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tpis/error.h"

namespace tpis {
namespace {

template <std::size_t N>
std::optional<std::size_t> IndexOf(const std::array<std::string_view, N>& names,
                                   std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

template <std::size_t N>
bool ArraysEqual(const std::array<double, N>& a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!SameValue(a[i], b[i])) return false;
  }
  return true;
}

void CheckBinary(const PatientRecord& record, std::string_view field, double v) {
  if (IsMissing(v) || v == 0.0 || v == 1.0) return;
  throw Error(ErrorCode::kInvalidArgument,
              "record '" + record.id + "': field " + std::string(field) +
                  " must be 0, 1 or missing");
}

}  // namespace

std::string_view LabelCode(Label label) {
  return label == Label::kTuberculosis ? "TB" : "P";
}

std::optional<Label> ParseLabel(std::string_view code) {
  if (code == "TB") return Label::kTuberculosis;
  if (code == "P") return Label::kPneumonia;
  return std::nullopt;
}

std::optional<std::size_t> StepOneIndex(std::string_view name) {
  return IndexOf(kStepOneFeatureNames, name);
}

std::optional<std::size_t> StepTwoIndex(std::string_view name) {
  return IndexOf(kStepTwoFeatureNames, name);
}

bool StepOneFeatures::Complete() const {
  return std::none_of(values.begin(), values.end(), IsMissing);
}

bool operator==(const StepOneFeatures& a, const StepOneFeatures& b) {
  return ArraysEqual(a.values, b.values);
}

bool StepTwoFeatures::Complete() const {
  return std::none_of(values.begin(), values.end(), IsMissing);
}

bool operator==(const StepTwoFeatures& a, const StepTwoFeatures& b) {
  return ArraysEqual(a.values, b.values);
}

void ValidateRecord(const PatientRecord& record) {
  const double age = record.step1.values[0];
  if (!IsMissing(age) && !(age >= 0.0 && age <= kMaxAge)) {
    throw Error(ErrorCode::kInvalidArgument,
                "record '" + record.id + "': age outside [0, 130]");
  }
  for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) {
    CheckBinary(record, kStepOneFeatureNames[i], record.step1.values[i]);
  }
  if (!record.step2) return;
  for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
    const double v = record.step2->values[i];
    if (IsStepTwoBinary(i)) {
      CheckBinary(record, kStepTwoFeatureNames[i], v);
    } else if (!IsMissing(v) && !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record '" + record.id + "': field " +
                      std::string(kStepTwoFeatureNames[i]) + " is not finite");
    }
  }
}

void ValidateDataset(const Dataset& dataset) {
  std::unordered_set<std::string> ids;
  for (const auto& record : dataset) {
    ValidateRecord(record);
    if (!ids.insert(record.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate record id '" + record.id + "'");
    }
  }
}

std::vector<Label> Labels(const Dataset& dataset) {
  std::vector<Label> out;
  out.reserve(dataset.size());
  for (const auto& record : dataset) {
    if (!record.label) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record '" + record.id + "' has no label");
    }
    out.push_back(*record.label);
  }
  return out;
}

std::string_view FeatureSetName(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::kFs1: return "FS1";
    case FeatureSet::kFs2: return "FS2";
    case FeatureSet::kFs3: return "FS3";
    case FeatureSet::kFs4: return "FS4";
    case FeatureSet::kFs5: return "FS5";
  }
  return "?";
}

std::optional<FeatureSet> ParseFeatureSet(std::string_view name) {
  for (FeatureSet fs : {FeatureSet::kFs1, FeatureSet::kFs2, FeatureSet::kFs3,
                        FeatureSet::kFs4, FeatureSet::kFs5}) {
    if (FeatureSetName(fs) == name) return fs;
  }
  return std::nullopt;
}

bool RequiresMetaFeatures(FeatureSet fs) {
  return fs == FeatureSet::kFs3 || fs == FeatureSet::kFs4;
}

bool RequiresStepTwo(FeatureSet fs) {
  return fs == FeatureSet::kFs2 || fs == FeatureSet::kFs4 || fs == FeatureSet::kFs5;
}

std::vector<std::string> FeatureNames(FeatureSet fs, std::size_t meta_count) {
  std::vector<std::string> names;
  auto add_step1 = [&] {
    for (auto n : kStepOneFeatureNames) names.emplace_back(n);
  };
  auto add_step2 = [&] {
    for (auto n : kStepTwoFeatureNames) names.emplace_back(n);
  };
  auto add_meta = [&] {
    for (std::size_t j = 0; j < meta_count; ++j) {
      names.push_back("meta2_" + std::to_string(j));
    }
  };
  switch (fs) {
    case FeatureSet::kFs1: add_step1(); break;
    case FeatureSet::kFs2: add_step2(); break;
    case FeatureSet::kFs3: add_meta(); break;
    case FeatureSet::kFs4: add_step2(); add_meta(); break;
    case FeatureSet::kFs5: add_step1(); add_step2(); break;
  }
  return names;
}

std::vector<double> SelectFeatures(const PatientRecord& record, FeatureSet fs,
                                   std::optional<std::span<const double>> meta2) {
  if (RequiresMetaFeatures(fs) && !meta2) {
    throw Error(ErrorCode::kMissingMetaFeatures,
                std::string(FeatureSetName(fs)) + " needs meta-features");
  }
  if (RequiresStepTwo(fs) && !record.step2) {
    throw Error(ErrorCode::kStepTwoUnavailable,
                "record '" + record.id + "' has no step-2 features");
  }
  std::vector<double> out;
  auto add_step1 = [&] {
    out.insert(out.end(), record.step1.values.begin(), record.step1.values.end());
  };
  auto add_step2 = [&] {
    out.insert(out.end(), record.step2->values.begin(), record.step2->values.end());
  };
  auto add_meta = [&] { out.insert(out.end(), meta2->begin(), meta2->end()); };
  switch (fs) {
    case FeatureSet::kFs1: add_step1(); break;
    case FeatureSet::kFs2: add_step2(); break;
    case FeatureSet::kFs3: add_meta(); break;
    case FeatureSet::kFs4: add_step2(); add_meta(); break;
    case FeatureSet::kFs5: add_step1(); add_step2(); break;
  }
  return out;
}

}  // namespace tpis
