#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpis/domain.h"
#include "tpis/pipeline.h"

namespace tpis {

// Dataset files are CSV with the header
//   id,label,<18 step-1 columns>,<10 step-2 columns>
// in the order of kStepOneFeatureNames / kStepTwoFeatureNames. Empty fields
// are missing values; an empty label is an unlabeled record. A row whose ten
// step-2 fields are all empty has no step-2 data. Quoting follows RFC 4180.
std::vector<std::string> DatasetColumns();

// Errors: kSchemaError for a header that differs from DatasetColumns();
// kCellError for a bad field, with the line number (header = line 1) and
// column name in the message.
Dataset ParseDatasetCsv(std::string_view text);
std::string FormatDatasetCsv(const Dataset& dataset);

Dataset ReadDataset(const std::string& path);  // kIoError if unreadable
void WriteDataset(const Dataset& dataset, const std::string& path);

inline constexpr int kModelFormatVersion = 1;

// The archive is a JSON document with sorted keys; numbers are written in
// shortest round-trip form, so reloading reproduces every double exactly and
// saving the same model twice gives identical bytes.
nlohmann::json ModelToJson(const TpisModel& model);
// Errors: kVersionError for another format_version, kArchiveError for a
// malformed or inconsistent archive.
TpisModel ModelFromJson(const nlohmann::json& archive);

std::string SerializeModel(const TpisModel& model);
TpisModel DeserializeModel(std::string_view text);

void SaveModel(const TpisModel& model, const std::string& path);
TpisModel LoadModel(const std::string& path);

// Small helpers shared with the CLI.
std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, std::string_view contents);

}  // namespace tpis
