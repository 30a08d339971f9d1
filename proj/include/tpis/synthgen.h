#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tpis/domain.h"

namespace tpis {

struct NumericMarginal {
  double min = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double std = 0.0;

  friend bool operator==(const NumericMarginal&, const NumericMarginal&) = default;
};

// One feature of one class. Whether `numeric` or `yes_rate` applies follows
// from the feature's position (IsStepOneBinary / IsStepTwoBinary).
struct FeatureSpec {
  NumericMarginal numeric;
  double yes_rate = 0.0;
  double missing_rate = 0.0;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct ClassSpec {
  // Patients of this class in the source cohort; prevalence is the share of
  // the total over both classes.
  double count = 0.0;
  std::array<FeatureSpec, kStepOneFeatureCount> step1;
  std::array<FeatureSpec, kStepTwoFeatureCount> step2;

  friend bool operator==(const ClassSpec&, const ClassSpec&) = default;
};

inline constexpr int kCohortSpecVersion = 1;

struct CohortSpec {
  int version = kCohortSpecVersion;
  ClassSpec pneumonia;
  ClassSpec tuberculosis;

  const ClassSpec& of(Label label) const {
    return label == Label::kTuberculosis ? tuberculosis : pneumonia;
  }
  ClassSpec& of(Label label) {
    return label == Label::kTuberculosis ? tuberculosis : pneumonia;
  }
  double Prevalence(Label label) const;

  friend bool operator==(const CohortSpec&, const CohortSpec&) = default;
};

// Parameters shipped in data/cohort_spec.json (compiled in).
CohortSpec DefaultSpec();

// The JSON document format of data/cohort_spec.json. Binary features accept
// either {"yes": a, "no": b} counts or {"rate": r}. Features absent from
// "missing" have missing rate 0. Throws kSpecError.
CohortSpec ParseCohortSpec(const nlohmann::json& doc);
CohortSpec ParseCohortSpec(std::string_view text);
CohortSpec LoadCohortSpec(const std::string& path);

// Rates in [0, 1], min <= median <= max, mean in [min, max], std >= 0,
// positive class counts, known version. Throws kSpecError.
void ValidateCohortSpec(const CohortSpec& spec);

// Draws n labelled patients. Label by prevalence; numeric values from a
// normal(mean, std) truncated to [min, max] (rejection, falling back to the
// clamped mean); binaries Bernoulli(yes_rate). Ages are whole years and lab
// values are rounded to two decimals. With `missing`, each cell is then
// masked with its feature's missing rate; a record whose ten step-2 cells
// all end up missing is stored without step-2 data.
//
// Throws kInvalidArgument for n < 10 and kSpecError for an invalid spec.
Dataset SampleCohort(const CohortSpec& spec, std::size_t n, std::uint64_t seed,
                     bool missing);

}  // namespace tpis
