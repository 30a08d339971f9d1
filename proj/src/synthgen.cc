#include "tpis/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tpis/error.h"
#include "tpis/rng.h"

namespace tpis {

extern const std::string_view kDefaultCohortSpecJson;

namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& message) {
  throw Error(ErrorCode::kSpecError, message);
}

double Number(const json& j, const std::string& where) {
  if (!j.is_number()) Fail(where + " must be a number");
  return j.get<double>();
}

bool IsBinary(bool step_two, std::size_t i) {
  return step_two ? IsStepTwoBinary(i) : IsStepOneBinary(i);
}

// Locates a feature name in either block.
struct FeatureRef {
  bool step_two;
  std::size_t index;
};

std::optional<FeatureRef> FindFeature(std::string_view name) {
  if (auto i = StepOneIndex(name)) return FeatureRef{false, *i};
  if (auto i = StepTwoIndex(name)) return FeatureRef{true, *i};
  return std::nullopt;
}

FeatureSpec& Slot(ClassSpec& c, FeatureRef ref) {
  return ref.step_two ? c.step2[ref.index] : c.step1[ref.index];
}

ClassSpec ParseClass(const json& j, const std::string& code) {
  if (!j.is_object()) Fail("class " + code + " must be an object");
  static const std::set<std::string> kKeys = {"count", "numeric", "binary", "missing",
                                              "interpreted"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) Fail("class " + code + ": unknown key '" + key + "'");
  }
  ClassSpec out;
  if (!j.contains("count")) Fail("class " + code + ": missing count");
  out.count = Number(j["count"], code + ".count");

  std::set<std::string> seen;
  const auto parse_section = [&](const char* section, bool want_binary) {
    if (!j.contains(section) || !j[section].is_object()) {
      Fail("class " + code + ": missing section '" + section + "'");
    }
    for (const auto& [name, v] : j[section].items()) {
      const auto ref = FindFeature(name);
      const std::string where = code + "." + section + "." + name;
      if (!ref) Fail(where + ": unknown feature");
      if (IsBinary(ref->step_two, ref->index) != want_binary) {
        Fail(where + ": feature belongs in the " +
             (want_binary ? std::string("numeric") : std::string("binary")) + " section");
      }
      seen.insert(name);
      FeatureSpec& slot = Slot(out, *ref);
      if (want_binary) {
        if (v.contains("rate")) {
          slot.yes_rate = Number(v["rate"], where + ".rate");
        } else {
          if (!v.contains("yes") || !v.contains("no")) Fail(where + ": needs yes/no or rate");
          const double yes = Number(v["yes"], where + ".yes");
          const double no = Number(v["no"], where + ".no");
          if (yes < 0 || no < 0 || yes + no <= 0) Fail(where + ": bad counts");
          slot.yes_rate = yes / (yes + no);
        }
      } else {
        for (const char* key : {"min", "mean", "median", "max", "std"}) {
          if (!v.contains(key)) Fail(where + ": missing '" + key + "'");
        }
        slot.numeric = {Number(v["min"], where + ".min"), Number(v["mean"], where + ".mean"),
                        Number(v["median"], where + ".median"),
                        Number(v["max"], where + ".max"), Number(v["std"], where + ".std")};
      }
    }
  };
  parse_section("numeric", false);
  parse_section("binary", true);

  const std::size_t total = kStepOneFeatureCount + kStepTwoFeatureCount;
  if (seen.size() != total) {
    std::string absent;
    for (auto name : kStepOneFeatureNames) {
      if (!seen.count(std::string(name))) absent += " " + std::string(name);
    }
    for (auto name : kStepTwoFeatureNames) {
      if (!seen.count(std::string(name))) absent += " " + std::string(name);
    }
    Fail("class " + code + ": features not specified:" + absent);
  }

  if (j.contains("missing")) {
    for (const auto& [name, v] : j["missing"].items()) {
      const auto ref = FindFeature(name);
      if (!ref) Fail(code + ".missing." + name + ": unknown feature");
      Slot(out, *ref).missing_rate = Number(v, code + ".missing." + name);
    }
  }
  return out;
}

void CheckRate(double r, const std::string& where) {
  if (!(r >= 0.0 && r <= 1.0)) Fail(where + " must be in [0, 1]");
}

void CheckClass(const ClassSpec& c, const std::string& code) {
  if (!(c.count > 0.0) || !std::isfinite(c.count)) Fail(code + ": count must be positive");
  const auto check = [&](const FeatureSpec& f, bool binary, std::string_view name) {
    const std::string where = code + "." + std::string(name);
    CheckRate(f.missing_rate, where + " missing rate");
    if (binary) {
      CheckRate(f.yes_rate, where + " rate");
      return;
    }
    const auto& m = f.numeric;
    for (double v : {m.min, m.mean, m.median, m.max, m.std}) {
      if (!std::isfinite(v)) Fail(where + ": non-finite parameter");
    }
    if (!(m.min <= m.median && m.median <= m.max)) Fail(where + ": needs min <= median <= max");
    if (!(m.min <= m.mean && m.mean <= m.max)) Fail(where + ": mean outside [min, max]");
    if (m.std < 0.0) Fail(where + ": negative std");
  };
  for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
    check(c.step1[i], IsStepOneBinary(i), kStepOneFeatureNames[i]);
  }
  for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
    check(c.step2[i], IsStepTwoBinary(i), kStepTwoFeatureNames[i]);
  }
}

double SampleNumeric(const NumericMarginal& m, Rng& rng) {
  double v = m.mean;
  if (m.std > 0.0 && m.max > m.min) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double draw = m.mean + m.std * rng.Normal();
      if (draw >= m.min && draw <= m.max) {
        v = draw;
        break;
      }
    }
  }
  return std::clamp(v, m.min, m.max);
}

double SampleFeature(const FeatureSpec& f, bool binary, double decimals_scale, Rng& rng) {
  if (binary) return rng.Bernoulli(f.yes_rate) ? 1.0 : 0.0;
  const double v = std::round(SampleNumeric(f.numeric, rng) * decimals_scale) / decimals_scale;
  return std::clamp(v, f.numeric.min, f.numeric.max);
}

}  // namespace

double CohortSpec::Prevalence(Label label) const {
  return of(label).count / (pneumonia.count + tuberculosis.count);
}

CohortSpec ParseCohortSpec(const json& doc) {
  if (!doc.is_object()) Fail("cohort spec must be a JSON object");
  static const std::set<std::string> kKeys = {"format", "version", "description", "classes"};
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) Fail("unknown top-level key '" + key + "'");
  }
  CohortSpec spec;
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    Fail("missing integer 'version'");
  }
  spec.version = doc["version"].get<int>();
  if (spec.version != kCohortSpecVersion) {
    Fail("unsupported cohort spec version " + std::to_string(spec.version) + " (expected " +
         std::to_string(kCohortSpecVersion) + ")");
  }
  if (!doc.contains("classes") || !doc["classes"].is_object()) Fail("missing 'classes'");
  const json& classes = doc["classes"];
  for (const auto& [key, _] : classes.items()) {
    if (key != "P" && key != "TB") Fail("unknown class '" + key + "'");
  }
  if (!classes.contains("P") || !classes.contains("TB")) Fail("both classes P and TB required");
  spec.pneumonia = ParseClass(classes["P"], "P");
  spec.tuberculosis = ParseClass(classes["TB"], "TB");
  ValidateCohortSpec(spec);
  return spec;
}

CohortSpec ParseCohortSpec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    Fail(std::string("not valid JSON: ") + e.what());
  }
  return ParseCohortSpec(doc);
}

CohortSpec LoadCohortSpec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open cohort spec '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCohortSpec(std::string_view(buffer.str()));
}

CohortSpec DefaultSpec() {
  static const CohortSpec spec = ParseCohortSpec(kDefaultCohortSpecJson);
  return spec;
}

void ValidateCohortSpec(const CohortSpec& spec) {
  if (spec.version != kCohortSpecVersion) Fail("unsupported version");
  CheckClass(spec.pneumonia, "P");
  CheckClass(spec.tuberculosis, "TB");
}

Dataset SampleCohort(const CohortSpec& spec, std::size_t n, std::uint64_t seed,
                     bool missing) {
  if (n < 10) {
    throw Error(ErrorCode::kInvalidArgument, "cohort size must be at least 10");
  }
  ValidateCohortSpec(spec);
  Rng rng(seed);
  const double tb_rate = spec.Prevalence(Label::kTuberculosis);
  const int width = std::max<int>(5, static_cast<int>(std::to_string(n).size()));

  Dataset out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    PatientRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "pt-%0*zu", width, r + 1);
    rec.id = id;
    const Label label = rng.Bernoulli(tb_rate) ? Label::kTuberculosis : Label::kPneumonia;
    rec.label = label;
    const ClassSpec& c = spec.of(label);

    for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
      rec.step1.values[i] = SampleFeature(c.step1[i], IsStepOneBinary(i), 1.0, rng);
    }
    StepTwoFeatures s2;
    for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
      s2.values[i] = SampleFeature(c.step2[i], IsStepTwoBinary(i), 100.0, rng);
    }
    if (missing) {
      for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
        if (rng.Bernoulli(c.step1[i].missing_rate)) rec.step1.values[i] = kMissing;
      }
      for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
        if (rng.Bernoulli(c.step2[i].missing_rate)) s2.values[i] = kMissing;
      }
    }
    const bool any_step2 = std::any_of(s2.values.begin(), s2.values.end(),
                                       [](double v) { return !IsMissing(v); });
    if (any_step2) rec.step2 = s2;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace tpis
