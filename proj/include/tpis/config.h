#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tpis/evaluation.h"
#include "tpis/pipeline.h"

namespace tpis {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  double session_ttl_seconds = 900.0;
  std::size_t max_sessions = 10000;
};

struct PathConfig {
  std::string data;
  std::string model;
  std::string spec;
  std::string out;
};

// Everything a CLI run can be configured with. Loaded from a JSON document
// whose keys mirror the fields:
//   {"seed": 7, "eval_seed": 1, "epsilon": 0.4, "route_threshold": 0.51,
//    "folds": 5, "runs": 30, "train_per_class": 60,
//    "preprocess": {"impute_k": 5, "missing_threshold": 0.3, "flag_outliers": true},
//    "learners": {"rf": {"trees": 50}, ...},
//    "paths": {"data": "", "model": "", "spec": "", "out": ""},
//    "server": {"host": "127.0.0.1", "port": 8080, "session_ttl_seconds": 900,
//               "max_sessions": 10000}}
// Every key is optional; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 7;       // model fitting
  std::uint64_t eval_seed = 1;  // repeated evaluation splits
  double epsilon = 0.4;
  double route_threshold = 0.51;
  std::size_t folds = 5;
  std::size_t runs = 30;
  std::size_t train_per_class = 60;
  std::size_t impute_k = 5;
  double missing_threshold = 0.30;
  bool flag_outliers = true;
  LearnerOverrides learners;  // applied wherever a learner of that kind is built
  PathConfig paths;
  ServerConfig server;
};

// Throws kConfigError naming the offending key.
RunConfig ParseRunConfig(const nlohmann::json& doc);
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string& path);
nlohmann::json RunConfigToJson(const RunConfig& config);

// Range checks (kConfigError).
void ValidateRunConfig(const RunConfig& config);

TpisConfig ToTpisConfig(const RunConfig& config);
EvalOptions ToEvalOptions(const RunConfig& config);

}  // namespace tpis
