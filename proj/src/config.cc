#include "tpis/config.h"

#include <set>

#include "tpis/error.h"
#include "tpis/storage.h"

namespace tpis {

namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

void CheckKeys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) Fail(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      Fail("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  const json& v = j[key];
  const std::string name = where.empty() ? key : where + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) Fail(name + " must be true or false");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) Fail(name + " must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) Fail(name + " must be an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
        v.get<long long>() < 0) {
      Fail(name + " must not be negative");
    }
  } else {
    if (!v.is_number()) Fail(name + " must be a number");
  }
  out = v.get<T>();
}

std::vector<LearnerSpec> ApplyOverrides(std::vector<LearnerSpec> specs,
                                        const LearnerOverrides& overrides) {
  for (auto& s : specs) {
    if (auto it = overrides.find(s.kind); it != overrides.end()) {
      for (const auto& [k, v] : it->second) s.hyperparameters[k] = v;
    }
  }
  return specs;
}

}  // namespace

RunConfig ParseRunConfig(const json& doc) {
  CheckKeys(doc, "", {"seed", "eval_seed", "epsilon", "route_threshold", "folds", "runs",
                      "train_per_class", "preprocess", "learners", "paths", "server"});
  RunConfig c;
  Read(doc, "seed", "", c.seed);
  Read(doc, "eval_seed", "", c.eval_seed);
  Read(doc, "epsilon", "", c.epsilon);
  Read(doc, "route_threshold", "", c.route_threshold);
  Read(doc, "folds", "", c.folds);
  Read(doc, "runs", "", c.runs);
  Read(doc, "train_per_class", "", c.train_per_class);
  if (doc.contains("preprocess")) {
    const json& p = doc["preprocess"];
    CheckKeys(p, "preprocess", {"impute_k", "missing_threshold", "flag_outliers"});
    Read(p, "impute_k", "preprocess", c.impute_k);
    Read(p, "missing_threshold", "preprocess", c.missing_threshold);
    Read(p, "flag_outliers", "preprocess", c.flag_outliers);
  }
  if (doc.contains("learners")) {
    const json& l = doc["learners"];
    if (!l.is_object()) Fail("learners must be an object");
    for (const auto& [name, params] : l.items()) {
      const auto kind = ParseLearnerKind(name);
      if (!kind) Fail("unknown key 'learners." + name + "'");
      if (!params.is_object()) Fail("learners." + name + " must be an object");
      Hyperparameters hp;
      for (const auto& [key, v] : params.items()) {
        if (!v.is_number()) Fail("learners." + name + "." + key + " must be a number");
        hp[key] = v.get<double>();
      }
      c.learners[*kind] = hp;
    }
  }
  if (doc.contains("paths")) {
    const json& p = doc["paths"];
    CheckKeys(p, "paths", {"data", "model", "spec", "out"});
    Read(p, "data", "paths", c.paths.data);
    Read(p, "model", "paths", c.paths.model);
    Read(p, "spec", "paths", c.paths.spec);
    Read(p, "out", "paths", c.paths.out);
  }
  if (doc.contains("server")) {
    const json& s = doc["server"];
    CheckKeys(s, "server", {"host", "port", "session_ttl_seconds", "max_sessions"});
    Read(s, "host", "server", c.server.host);
    Read(s, "port", "server", c.server.port);
    Read(s, "session_ttl_seconds", "server", c.server.session_ttl_seconds);
    Read(s, "max_sessions", "server", c.server.max_sessions);
  }
  ValidateRunConfig(c);
  return c;
}

RunConfig ParseRunConfig(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    Fail(std::string("config is not valid JSON: ") + e.what());
  }
  return ParseRunConfig(doc);
}

RunConfig LoadRunConfig(const std::string& path) {
  return ParseRunConfig(std::string_view(ReadTextFile(path)));
}

json RunConfigToJson(const RunConfig& c) {
  json learners = json::object();
  for (const auto& [kind, hp] : c.learners) learners[std::string(LearnerKindName(kind))] = hp;
  return {{"seed", c.seed},
          {"eval_seed", c.eval_seed},
          {"epsilon", c.epsilon},
          {"route_threshold", c.route_threshold},
          {"folds", c.folds},
          {"runs", c.runs},
          {"train_per_class", c.train_per_class},
          {"preprocess",
           {{"impute_k", c.impute_k},
            {"missing_threshold", c.missing_threshold},
            {"flag_outliers", c.flag_outliers}}},
          {"learners", learners},
          {"paths",
           {{"data", c.paths.data},
            {"model", c.paths.model},
            {"spec", c.paths.spec},
            {"out", c.paths.out}}},
          {"server",
           {{"host", c.server.host},
            {"port", c.server.port},
            {"session_ttl_seconds", c.server.session_ttl_seconds},
            {"max_sessions", c.server.max_sessions}}}};
}

void ValidateRunConfig(const RunConfig& c) {
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) Fail("epsilon must be in (0, 1)");
  if (!(c.route_threshold >= 0.0)) Fail("route_threshold must be >= 0");
  if (c.folds < 2) Fail("folds must be >= 2");
  if (c.runs < 1) Fail("runs must be >= 1");
  if (c.train_per_class < 1) Fail("train_per_class must be >= 1");
  if (c.impute_k < 1) Fail("preprocess.impute_k must be >= 1");
  if (!(c.missing_threshold >= 0.0 && c.missing_threshold <= 1.0)) {
    Fail("preprocess.missing_threshold must be in [0, 1]");
  }
  if (c.server.port < 0 || c.server.port > 65535) Fail("server.port must be in [0, 65535]");
  if (!(c.server.session_ttl_seconds > 0.0)) Fail("server.session_ttl_seconds must be > 0");
  if (c.server.max_sessions < 1) Fail("server.max_sessions must be >= 1");
  for (const auto& [kind, hp] : c.learners) {
    try {
      ValidateSpec(LearnerSpec{kind, hp, 0});
    } catch (const Error& e) {
      Fail("learners." + std::string(LearnerKindName(kind)) + ": " + e.what());
    }
  }
}

TpisConfig ToTpisConfig(const RunConfig& c) {
  TpisConfig t = DefaultTpisConfig(c.seed);
  t.layer1 = ApplyOverrides(t.layer1, c.learners);
  t.layer2 = ApplyOverrides(t.layer2, c.learners);
  t.step2 = ApplyOverrides(t.step2, c.learners);
  t.folds = c.folds;
  t.policy.epsilon = c.epsilon;
  t.policy.route_threshold = c.route_threshold;
  t.preprocess.impute_k = c.impute_k;
  t.preprocess.missing_threshold = c.missing_threshold;
  t.preprocess.flag_outliers = c.flag_outliers;
  return t;
}

EvalOptions ToEvalOptions(const RunConfig& c) {
  EvalOptions o;
  o.runs = c.runs;
  o.train_per_class = c.train_per_class;
  o.seed = c.eval_seed;
  o.tpis = ToTpisConfig(c);
  return o;
}

}  // namespace tpis
