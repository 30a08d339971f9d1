// Command-line driver: synthetic cohorts, training, evaluation, the routed
// workflow and the HTTP service.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpis/config.h"
#include "tpis/error.h"
#include "tpis/evaluation.h"
#include "tpis/pipeline.h"
#include "tpis/service.h"
#include "tpis/storage.h"
#include "tpis/synthgen.h"

namespace {

using nlohmann::json;
using namespace tpis;

// Options shared by every subcommand; flags win over the environment, which
// wins over the config file.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> threshold;
  std::optional<std::size_t> folds;

  RunConfig Load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : LoadRunConfig(config_path);
    if (const char* v = std::getenv("TPIS_HOST"); v && *v) c.server.host = v;
    if (const char* v = std::getenv("TPIS_PORT"); v && *v) {
      try {
        c.server.port = std::stoi(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfigError, std::string("TPIS_PORT is not a number: ") + v);
      }
    }
    if (const char* v = std::getenv("TPIS_MODEL"); v && *v) c.paths.model = v;
    if (seed) c.seed = *seed;
    if (epsilon) c.epsilon = *epsilon;
    if (threshold) c.route_threshold = *threshold;
    if (folds) c.folds = *folds;
    ValidateRunConfig(c);
    return c;
  }
};

void AddCommon(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "Run configuration (JSON)");
  cmd->add_option("--seed", common.seed, "Master seed");
  cmd->add_option("--epsilon", common.epsilon, "Vote threshold epsilon");
  cmd->add_option("--threshold", common.threshold, "Routing threshold on CS");
  cmd->add_option("--folds", common.folds, "Stacking folds");
}

std::string Require(const std::string& flag_value, const std::string& config_value,
                    const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw CLI::RequiredError(what);
}

void Emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    WriteTextFile(out_path, text);
  }
}

CohortSpec SpecFor(const std::string& path) {
  return path.empty() ? DefaultSpec() : LoadCohortSpec(path);
}

std::optional<ModelRecipe> RecipeByName(const std::string& name, FeatureSet fs,
                                        const RunConfig& config) {
  if (name == "tpis-l1") return TpisRecipe(TpisStage::kLayerOne);
  if (name == "tpis" || name == "tpis-l2") return TpisRecipe(TpisStage::kLayerTwo);
  if (name == "tpis-step2") return TpisRecipe(TpisStage::kStepTwo);
  if (name == "workflow") return TpisRecipe(TpisStage::kWorkflow);
  if (auto kind = ParseLearnerKind(name)) {
    LearnerSpec spec{*kind, {}, static_cast<std::uint64_t>(*kind)};
    if (auto it = config.learners.find(*kind); it != config.learners.end()) {
      spec.hyperparameters = it->second;
    }
    ValidateSpec(spec);
    return SingleLearnerRecipe(spec, fs);
  }
  return std::nullopt;
}

json DiagnosisJson(const TpisModel& model, const PatientRecord& record, bool force_step2) {
  const EarlyDiagnosis d = EarlyDiagnose(model, record.step1);
  json out = {{"id", record.id},
              {"label", VerdictCode(d.verdict)},
              {"cs", d.cs},
              {"routed", d.routed},
              {"meta2", d.meta2.probs}};
  if (record.step2 && (d.routed || force_step2)) {
    const FinalDecision f = FinalDiagnose(model, d.meta2, *record.step2);
    out["final_label"] = LabelCode(f.label);
    out["votes"] = f.votes.probs;
    out["tb_votes"] = f.tb_votes;
  } else if (d.routed) {
    out["note"] = "routed to step 2, but the record has no step-2 data";
  }
  return out;
}

PatientRecord RecordFromJson(const json& doc) {
  PatientRecord r;
  r.id = doc.value("id", std::string("record"));
  const json& s1 = doc.contains("step1") ? doc["step1"] : doc;
  for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) {
    const std::string name(kStepOneFeatureNames[i]);
    if (!s1.contains(name)) {
      throw Error(ErrorCode::kInvalidArgument, "record is missing field " + name);
    }
    r.step1.values[i] = s1[name].is_null() ? kMissing : s1[name].get<double>();
  }
  if (doc.contains("step2")) {
    StepTwoFeatures s2;
    for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) {
      const std::string name(kStepTwoFeatureNames[i]);
      if (!doc["step2"].contains(name)) {
        throw Error(ErrorCode::kInvalidArgument, "record step2 is missing field " + name);
      }
      const json& v = doc["step2"][name];
      s2.values[i] = v.is_null() ? kMissing : v.get<double>();
    }
    r.step2 = s2;
  }
  ValidateRecord(r);
  return r;
}

int Main(int argc, char** argv) {
  CLI::App app{"Two-step TB / pneumonia triage: training, evaluation and serving"};
  app.require_subcommand(1);
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort CSV");
  std::size_t synth_n = 199;
  std::uint64_t synth_seed = 7;
  std::string synth_out, synth_spec;
  bool synth_complete = false;
  synth->add_option("--n", synth_n, "Number of patients")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV")->required();
  synth->add_option("--spec", synth_spec, "Cohort spec JSON (default: built-in)");
  synth->add_flag("--complete", synth_complete, "Do not mask any cells as missing");

  // train
  auto* train = app.add_subcommand("train", "Fit a model on a labelled cohort");
  AddCommon(train, common);
  std::string train_data, train_out;
  train->add_option("--data", train_data, "Training cohort CSV");
  train->add_option("--out", train_out, "Model archive to write");

  // eval
  auto* eval = app.add_subcommand("eval", "Repeated balanced-split evaluation of one model");
  AddCommon(eval, common);
  std::string eval_data, eval_fs = "FS1", eval_model = "tpis";
  std::optional<std::size_t> eval_runs, eval_tpc;
  eval->add_option("--data", eval_data, "Cohort CSV");
  eval->add_option("--fs", eval_fs, "Feature set FS1..FS5")->capture_default_str();
  eval->add_option("--model", eval_model,
                   "tpis, tpis-l1, tpis-step2, workflow, or a learner: "
                   "knn, logreg, svm, dt, rf, adaboost, gbt")
      ->capture_default_str();
  eval->add_option("--runs", eval_runs, "Repetitions");
  eval->add_option("--train-per-class", eval_tpc, "Training patients per class");

  // compare
  auto* compare = app.add_subcommand("compare", "Comparison table for one feature set");
  AddCommon(compare, common);
  std::string cmp_data, cmp_fs = "FS1", cmp_format = "text", cmp_out;
  std::optional<std::size_t> cmp_runs, cmp_tpc;
  std::size_t cmp_n = 199;
  compare->add_option("--data", cmp_data, "Cohort CSV (default: synthetic cohort)");
  compare->add_option("--fs", cmp_fs, "Feature set FS1..FS5")->capture_default_str();
  compare->add_option("--runs", cmp_runs, "Repetitions");
  compare->add_option("--train-per-class", cmp_tpc, "Training patients per class");
  compare->add_option("--n", cmp_n, "Synthetic cohort size when --data is absent")
      ->capture_default_str();
  compare->add_option("--format", cmp_format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  compare->add_option("--out", cmp_out, "Write the table here instead of stdout");

  // workflow
  auto* workflow = app.add_subcommand("workflow", "Routed two-step workflow on a cohort");
  AddCommon(workflow, common);
  std::string wf_model, wf_data;
  workflow->add_option("--model", wf_model, "Model archive");
  workflow->add_option("--data", wf_data, "Cohort CSV");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Diagnose a single record");
  AddCommon(diagnose, common);
  std::string dx_model, dx_record, dx_data, dx_id;
  bool dx_step2 = false;
  diagnose->add_option("--model", dx_model, "Model archive");
  diagnose->add_option("--record", dx_record,
                       "JSON file with the 18 step-1 fields (optionally \"step2\": {...})");
  diagnose->add_option("--data", dx_data, "Cohort CSV to take the record from");
  diagnose->add_option("--id", dx_id, "Record id within --data");
  diagnose->add_flag("--step2", dx_step2, "Run step 2 even when step 1 is confident");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP triage service");
  AddCommon(serve, common);
  std::string sv_model, sv_host;
  std::optional<int> sv_port;
  serve->add_option("--model", sv_model, "Model archive");
  serve->add_option("--host", sv_host, "Bind address");
  serve->add_option("--port", sv_port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      const CohortSpec spec = SpecFor(synth_spec);
      WriteDataset(SampleCohort(spec, synth_n, synth_seed, !synth_complete), synth_out);
      std::cout << "wrote " << synth_n << " records to " << synth_out << "\n";
      return 0;
    }

    const RunConfig config = common.Load();

    if (train->parsed()) {
      const Dataset data = ReadDataset(Require(train_data, config.paths.data, "--data"));
      const std::string out = Require(train_out, config.paths.model, "--out");
      const TpisModel model = FitTpis(data, ToTpisConfig(config));
      SaveModel(model, out);
      std::cout << "trained on " << data.size() << " records; layers " << model.layer1.size()
                << "/" << model.layer2.size() << "/" << model.step2_layer.size()
                << "; model written to " << out << "\n";
      return 0;
    }

    if (eval->parsed()) {
      const auto fs = ParseFeatureSet(eval_fs);
      if (!fs) throw CLI::ValidationError("--fs", "unknown feature set " + eval_fs);
      const auto recipe = RecipeByName(eval_model, *fs, config);
      if (!recipe) throw CLI::ValidationError("--model", "unknown model " + eval_model);
      EvalOptions options = ToEvalOptions(config);
      if (eval_runs) options.runs = *eval_runs;
      if (eval_tpc) options.train_per_class = *eval_tpc;
      const Dataset data = ReadDataset(Require(eval_data, config.paths.data, "--data"));
      ComparisonTable table;
      table.feature_set = *fs;
      table.runs = options.runs;
      table.rows.push_back({recipe->name, RepeatedEval(*recipe, data, options)});
      std::cout << table.ToText();
      return 0;
    }

    if (compare->parsed()) {
      const auto fs = ParseFeatureSet(cmp_fs);
      if (!fs) throw CLI::ValidationError("--fs", "unknown feature set " + cmp_fs);
      EvalOptions options = ToEvalOptions(config);
      if (cmp_runs) options.runs = *cmp_runs;
      if (cmp_tpc) options.train_per_class = *cmp_tpc;
      const std::string data_path = cmp_data.empty() ? config.paths.data : cmp_data;
      const Dataset data = data_path.empty()
                               ? SampleCohort(SpecFor(config.paths.spec), cmp_n, config.seed, true)
                               : ReadDataset(data_path);
      const ComparisonTable table =
          CompareModels(*fs, DefaultRecipes(*fs, config.learners), data, options);
      Emit(cmp_format == "csv" ? table.ToCsv() : table.ToText(),
           cmp_out.empty() ? std::string() : cmp_out);
      return 0;
    }

    if (workflow->parsed()) {
      const TpisModel model = LoadModel(Require(wf_model, config.paths.model, "--model"));
      const Dataset data = ReadDataset(Require(wf_data, config.paths.data, "--data"));
      const WorkflowResult result =
          RunWorkflow(model, data, common.threshold ? std::optional<double>(config.route_threshold)
                                                    : std::nullopt);
      std::cout << FormatRoutingReport(result.report);
      const auto [step1, step2] = ReportTables(result.report);
      const AggregateResult agg = AggregateAccuracy(step1, step2);
      std::printf("Whole-patient estimate: %ld misdiagnosed of %.0f, accuracy %.2f%%\n",
                  agg.misdiagnosed, agg.total, 100.0 * agg.accuracy);
      for (const auto& f : result.failures) {
        std::cerr << "warning: record " << f.id << ": " << f.message << "\n";
      }
      return 0;
    }

    if (diagnose->parsed()) {
      const TpisModel model = LoadModel(Require(dx_model, config.paths.model, "--model"));
      PatientRecord record;
      if (!dx_record.empty()) {
        json doc;
        try {
          doc = json::parse(ReadTextFile(dx_record));
        } catch (const json::exception& e) {
          throw Error(ErrorCode::kInvalidArgument, std::string("bad record file: ") + e.what());
        }
        record = RecordFromJson(doc);
      } else {
        if (dx_data.empty() || dx_id.empty()) {
          throw CLI::ValidationError("diagnose", "give --record, or --data with --id");
        }
        bool found = false;
        for (auto& r : ReadDataset(dx_data)) {
          if (r.id == dx_id) {
            record = std::move(r);
            found = true;
            break;
          }
        }
        if (!found) throw Error(ErrorCode::kInvalidArgument, "no record with id " + dx_id);
      }
      std::cout << DiagnosisJson(model, record, dx_step2).dump(2) << "\n";
      return 0;
    }

    if (serve->parsed()) {
      const std::string model_path = Require(sv_model, config.paths.model, "--model");
      const std::string host = sv_host.empty() ? config.server.host : sv_host;
      const int port = sv_port ? *sv_port : config.server.port;
      ServiceOptions options;
      options.session_ttl_seconds = config.server.session_ttl_seconds;
      options.max_sessions = config.server.max_sessions;
      TriageService service(options);
      service.SetModel(std::make_shared<const TpisModel>(LoadModel(model_path)));
      HttpServer server(service);
      std::cout << "serving " << model_path << " on http://" << host << ":" << port << "\n"
                << std::flush;
      server.Run(host, port);
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return Main(argc, argv); }
