#include "tpis/storage.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tpis/error.h"
#include "tpis/json_util.h"

namespace tpis {

namespace {

using nlohmann::json;

constexpr std::size_t kColumnCount = 2 + kStepOneFeatureCount + kStepTwoFeatureCount;

// Splits CSV text into records of fields. Each record remembers the line it
// started on.
struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> SplitCsv(std::string_view text) {
  std::vector<CsvRecord> out;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord rec{line, {}};
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < n && text[i] == '"') {
        ++i;
        for (;;) {
          if (i >= n) {
            throw Error(ErrorCode::kCellError,
                        "line " + std::to_string(rec.line) + ": unterminated quoted field");
          }
          const char c = text[i++];
          if (c == '"') {
            if (i < n && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw Error(ErrorCode::kCellError,
                      "line " + std::to_string(line) + ": text after closing quote");
        }
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          field.push_back(text[i++]);
        }
      }
      rec.fields.push_back(field);
      if (i < n && text[i] == ',') {
        ++i;
        continue;
      }
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') ++i;
      ++line;
      end_of_record = true;
    }
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) out.push_back(std::move(rec));
  }
  return out;
}

std::string QuoteField(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string FormatNumber(double v) {
  if (IsMissing(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void CellFail(std::size_t line, std::string_view column, const std::string& what) {
  throw Error(ErrorCode::kCellError, "line " + std::to_string(line) + ", column " +
                                         std::string(column) + ": " + what);
}

double ParseCell(const std::string& s, std::size_t line, std::string_view column) {
  if (s.empty()) return kMissing;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    CellFail(line, column, "cannot parse '" + s + "' as a number");
  }
  return v;
}

void CheckCell(double v, bool binary, std::size_t line, std::string_view column) {
  if (IsMissing(v)) return;
  if (binary && v != 0.0 && v != 1.0) CellFail(line, column, "binary field must be 0 or 1");
  if (column == "age" && !(v >= 0.0 && v <= kMaxAge)) {
    CellFail(line, column, "age outside [0, 130]");
  }
}

// ---- model archive ----

json PreprocessorToJson(const BlockPreprocessor& p) {
  json fences = json::array();
  for (const auto& f : p.fences) {
    fences.push_back(f ? json::array({f->lower, f->upper}) : json(nullptr));
  }
  std::vector<int> binary(p.binary_columns.begin(), p.binary_columns.end());
  return {{"column_names", p.column_names},
          {"binary_columns", binary},
          {"retained", p.retained},
          {"fences", fences},
          {"scaler", {{"min", ValuesToJson(p.scaler.min)}, {"max", ValuesToJson(p.scaler.max)}}},
          {"donors", MatrixToJson(p.donors)},
          {"impute_k", p.impute_k}};
}

BlockPreprocessor PreprocessorFromJson(const json& j, std::string_view block) {
  BlockPreprocessor p;
  p.column_names = j.at("column_names").get<std::vector<std::string>>();
  for (int b : j.at("binary_columns").get<std::vector<int>>()) p.binary_columns.push_back(b != 0);
  p.retained = j.at("retained").get<std::vector<std::size_t>>();
  for (const auto& f : j.at("fences")) {
    if (f.is_null()) {
      p.fences.emplace_back();
    } else {
      p.fences.push_back(BoxplotFences{f.at(0).get<double>(), f.at(1).get<double>()});
    }
  }
  p.scaler.min = ValuesFromJson(j.at("scaler").at("min"));
  p.scaler.max = ValuesFromJson(j.at("scaler").at("max"));
  p.donors = MatrixFromJson(j.at("donors"));
  p.impute_k = j.at("impute_k").get<std::size_t>();

  const auto bad = [&](const std::string& what) {
    throw Error(ErrorCode::kArchiveError, std::string(block) + " preprocessor: " + what);
  };
  const std::size_t w = p.retained.size();
  if (p.binary_columns.size() != p.column_names.size()) bad("binary flags / names mismatch");
  for (std::size_t r : p.retained) {
    if (r >= p.column_names.size()) bad("retained index out of range");
  }
  if (p.fences.size() != w || p.scaler.min.size() != w || p.scaler.max.size() != w) {
    bad("per-column state has the wrong width");
  }
  if (p.donors.rows() == 0 || p.donors.cols() != w) bad("donor matrix has the wrong shape");
  if (p.impute_k == 0) bad("impute_k must be positive");
  return p;
}

json LayerToJson(const EnsembleLayer& layer) {
  json learners = json::array();
  for (const auto& l : layer.learners()) learners.push_back(LearnerToJson(*l));
  return {{"folds", layer.folds()}, {"learners", learners}};
}

EnsembleLayer LayerFromJson(const json& j) {
  std::vector<TrainedLearner> learners;
  for (const auto& l : j.at("learners")) learners.push_back(LearnerFromJson(l));
  return EnsembleLayer(std::move(learners), j.at("folds").get<std::size_t>());
}

std::vector<std::string> Names(auto const& arr) {
  return std::vector<std::string>(arr.begin(), arr.end());
}

TpisModel ModelFromJsonUnchecked(const json& a) {
  TpisModel m;
  m.seed = a.at("seed").get<std::uint64_t>();
  m.folds = a.at("folds").get<std::size_t>();
  m.policy.epsilon = a.at("policy").at("epsilon").get<double>();
  m.policy.route_threshold = a.at("policy").at("route_threshold").get<double>();
  m.policy.Validate();

  const auto& manifest = a.at("manifest");
  if (manifest.at("step1_features").get<std::vector<std::string>>() !=
          Names(kStepOneFeatureNames) ||
      manifest.at("step2_features").get<std::vector<std::string>>() !=
          Names(kStepTwoFeatureNames)) {
    throw Error(ErrorCode::kArchiveError, "feature manifest does not match this build");
  }

  m.step1_prep = PreprocessorFromJson(a.at("preprocess").at("step1"), "step-1");
  m.step2_prep = PreprocessorFromJson(a.at("preprocess").at("step2"), "step-2");
  if (m.step1_prep.column_names != Names(kStepOneFeatureNames) ||
      m.step2_prep.column_names != Names(kStepTwoFeatureNames)) {
    throw Error(ErrorCode::kArchiveError, "preprocessor columns do not match the manifest");
  }
  const auto& layers = a.at("layers");
  m.layer1 = LayerFromJson(layers.at("layer1"));
  m.layer2 = LayerFromJson(layers.at("layer2"));
  m.step2_layer = LayerFromJson(layers.at("step2"));

  if (m.layer1.feature_count() != m.step1_prep.output_width() ||
      m.layer2.feature_count() != m.layer1.size() ||
      m.step2_layer.feature_count() != m.step2_prep.output_width() + m.layer2.size()) {
    throw Error(ErrorCode::kArchiveError, "layer dimensions are inconsistent");
  }
  if (manifest.at("step2_input").get<std::vector<std::string>>() != m.Step2InputNames()) {
    throw Error(ErrorCode::kArchiveError, "step-2 input manifest is inconsistent");
  }
  return m;
}

}  // namespace

std::vector<std::string> DatasetColumns() {
  std::vector<std::string> cols = {"id", "label"};
  for (auto n : kStepOneFeatureNames) cols.emplace_back(n);
  for (auto n : kStepTwoFeatureNames) cols.emplace_back(n);
  return cols;
}

Dataset ParseDatasetCsv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const auto records = SplitCsv(text);
  if (records.empty()) throw Error(ErrorCode::kSchemaError, "dataset file is empty");
  const auto columns = DatasetColumns();
  const auto& header = records.front().fields;
  if (header != columns) {
    for (std::size_t c = 0; c < std::max(header.size(), columns.size()); ++c) {
      if (c >= header.size()) {
        throw Error(ErrorCode::kSchemaError, "header is missing column '" + columns[c] + "'");
      }
      if (c >= columns.size()) {
        throw Error(ErrorCode::kSchemaError, "unknown column '" + header[c] + "'");
      }
      if (header[c] != columns[c]) {
        throw Error(ErrorCode::kSchemaError, "header column " + std::to_string(c + 1) + " is '" +
                                                 header[c] + "', expected '" + columns[c] + "'");
      }
    }
  }

  Dataset out;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != kColumnCount) {
      throw Error(ErrorCode::kCellError, "line " + std::to_string(rec.line) + ": expected " +
                                             std::to_string(kColumnCount) + " fields, got " +
                                             std::to_string(rec.fields.size()));
    }
    PatientRecord p;
    p.id = rec.fields[0];
    if (p.id.empty()) CellFail(rec.line, "id", "empty id");
    if (!ids.insert(p.id).second) CellFail(rec.line, "id", "duplicate id '" + p.id + "'");
    if (!rec.fields[1].empty()) {
      p.label = ParseLabel(rec.fields[1]);
      if (!p.label) CellFail(rec.line, "label", "unknown label '" + rec.fields[1] + "'");
    }
    for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
      const auto name = kStepOneFeatureNames[i];
      const double v = ParseCell(rec.fields[2 + i], rec.line, name);
      CheckCell(v, IsStepOneBinary(i), rec.line, name);
      p.step1.values[i] = v;
    }
    StepTwoFeatures s2;
    bool any = false;
    for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
      const auto name = kStepTwoFeatureNames[i];
      const double v = ParseCell(rec.fields[2 + kStepOneFeatureCount + i], rec.line, name);
      CheckCell(v, IsStepTwoBinary(i), rec.line, name);
      s2.values[i] = v;
      any = any || !IsMissing(v);
    }
    if (any) p.step2 = s2;
    out.push_back(std::move(p));
  }
  return out;
}

std::string FormatDatasetCsv(const Dataset& dataset) {
  std::string out;
  const auto columns = DatasetColumns();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out.push_back(',');
    out += columns[c];
  }
  out.push_back('\n');
  for (const auto& r : dataset) {
    out += QuoteField(r.id);
    out.push_back(',');
    if (r.label) out += LabelCode(*r.label);
    for (double v : r.step1.values) {
      out.push_back(',');
      out += FormatNumber(v);
    }
    for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
      out.push_back(',');
      if (r.step2) out += FormatNumber(r.step2->values[i]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIoError, "write to '" + path + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot replace '" + path + "': " + ec.message());
}

Dataset ReadDataset(const std::string& path) { return ParseDatasetCsv(ReadTextFile(path)); }

void WriteDataset(const Dataset& dataset, const std::string& path) {
  WriteTextFile(path, FormatDatasetCsv(dataset));
}

json ModelToJson(const TpisModel& model) {
  return {{"format", "tpis-model"},
          {"format_version", kModelFormatVersion},
          {"seed", model.seed},
          {"folds", model.folds},
          {"policy",
           {{"epsilon", model.policy.epsilon},
            {"route_threshold", model.policy.route_threshold}}},
          {"manifest",
           {{"step1_features", Names(kStepOneFeatureNames)},
            {"step2_features", Names(kStepTwoFeatureNames)},
            {"step2_input", model.Step2InputNames()}}},
          {"preprocess",
           {{"step1", PreprocessorToJson(model.step1_prep)},
            {"step2", PreprocessorToJson(model.step2_prep)}}},
          {"layers",
           {{"layer1", LayerToJson(model.layer1)},
            {"layer2", LayerToJson(model.layer2)},
            {"step2", LayerToJson(model.step2_layer)}}}};
}

TpisModel ModelFromJson(const json& archive) {
  if (!archive.is_object() || !archive.contains("format_version")) {
    throw Error(ErrorCode::kArchiveError, "not a model archive (no format_version)");
  }
  const auto& v = archive["format_version"];
  if (!v.is_number_integer()) throw Error(ErrorCode::kArchiveError, "bad format_version");
  if (v.get<long long>() != kModelFormatVersion) {
    throw Error(ErrorCode::kVersionError,
                "archive format_version " + std::to_string(v.get<long long>()) +
                    ", this build reads format_version " + std::to_string(kModelFormatVersion));
  }
  try {
    return ModelFromJsonUnchecked(archive);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kArchiveError, std::string("corrupted archive: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kArchiveError) throw;
    throw Error(ErrorCode::kArchiveError, std::string("corrupted archive: ") + e.what());
  }
}

std::string SerializeModel(const TpisModel& model) {
  return ModelToJson(model).dump(1) + "\n";
}

TpisModel DeserializeModel(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kArchiveError, std::string("unreadable archive: ") + e.what());
  }
  return ModelFromJson(doc);
}

void SaveModel(const TpisModel& model, const std::string& path) {
  WriteTextFile(path, SerializeModel(model));
}

TpisModel LoadModel(const std::string& path) { return DeserializeModel(ReadTextFile(path)); }

}  // namespace tpis
