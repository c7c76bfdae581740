// Command-line front end: train, evaluate, predict and audit workflows over
// JSON-lines corpora, driven by a flat-keyed config file with --set
// overrides (CLI > file > defaults).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <spanex/spanex.hpp>

namespace {

spanex::Config merge_config(const std::string& path,
                            const std::vector<std::string>& overrides) {
  spanex::Config cfg =
      path.empty() ? spanex::Config{} : spanex::Config::from_file(path);
  for (const auto& kv : overrides) cfg.set(kv);
  return cfg;
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw spanex::Error("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  const spanex::Config cfg = merge_config(config_path, overrides);
  const spanex::TrainResult result = spanex::train(cfg, &std::cout);
  std::cout << "final checkpoint: " << result.final_dir << "\n";
  if (result.best_dir) std::cout << "best checkpoint: " << *result.best_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_dir, const std::string& data_path,
                 const std::vector<std::string>& overrides, bool by_length,
                 bool by_distance, std::string json_path) {
  spanex::LoadedModel lm = spanex::load_checkpoint(model_dir);
  spanex::Config cfg = lm.config;
  for (const auto& kv : overrides) cfg.set(kv);
  const spanex::RunConfig run = spanex::RunConfig::resolve(cfg);

  const std::string data = data_path.empty() ? run.test_path : data_path;
  if (data.empty())
    throw spanex::ConfigError("no evaluation data: pass --data or set corpus.test");
  run.require_file(data, "corpus.test");
  const auto gold = spanex::load_corpus(data, lm.model.vocab()).first;
  if (gold.empty())
    throw spanex::ValidationError("evaluation corpus '" + data + "' is empty");

  std::vector<spanex::Sentence> predictions;
  predictions.reserve(gold.size());
  for (const auto& s : gold)
    predictions.push_back(lm.model.forward_inference(lm.store, s));

  const spanex::MatchPolicy policy = spanex::policy_from_run(run);
  const spanex::ScoreReport report = spanex::score(gold, predictions, policy);
  std::cout << spanex::format_score_report(report, run.eval_macro);

  nlohmann::json doc = spanex::score_report_to_json(report);
  if (by_length) {
    const auto buckets = spanex::entity_scores_by_length(gold, predictions, policy);
    std::cout << "\nentity F1 by mention length\n"
              << spanex::markdown_bucket_table("length", buckets);
    for (const auto& b : buckets)
      doc["entity_by_length"][b.label] = {{"tp", b.counts.tp},
                                          {"fp", b.counts.fp},
                                          {"fn", b.counts.fn},
                                          {"f1", b.counts.f1()}};
  }
  if (by_distance) {
    const auto buckets =
        spanex::relation_scores_by_distance(gold, predictions, policy);
    std::cout << "\nrelation F1 by entity distance\n"
              << spanex::markdown_bucket_table("distance", buckets);
    for (const auto& b : buckets)
      doc["relation_by_distance"][b.label] = {{"tp", b.counts.tp},
                                              {"fp", b.counts.fp},
                                              {"fn", b.counts.fn},
                                              {"f1", b.counts.f1()}};
  }
  if (json_path.empty()) json_path = run.output_dir + "/evaluation.json";
  write_json_file(json_path, doc);
  std::cout << "\nreport written to " << json_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& input_path,
                const std::string& output_path) {
  spanex::LoadedModel lm = spanex::load_checkpoint(model_dir);
  std::ifstream in(input_path);
  if (!in) throw spanex::ParseError("cannot open input '" + input_path + "'");

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!output_path.empty() && output_path != "-") {
    const auto parent = std::filesystem::path(output_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    file.open(output_path);
    if (!file) throw spanex::Error("cannot write '" + output_path + "'");
    out = &file;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json obj = nlohmann::json::parse(line);
      spanex::Sentence s;
      s.id = obj.at("id").get<std::string>();
      s.tokens = obj.at("tokens").get<std::vector<std::string>>();
      const spanex::Sentence predicted =
          lm.model.forward_inference(lm.store, s);
      *out << spanex::sentence_to_json(predicted).dump() << "\n";
    } catch (const std::exception& e) {
      // A malformed line must not abort the run; it becomes an error record.
      const nlohmann::json err{{"line", line_no}, {"error", e.what()}};
      *out << err.dump() << "\n";
    }
  }
  return 0;
}

int cmd_audit(const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& data_path) {
  const spanex::Config cfg = merge_config(config_path, overrides);
  const spanex::RunConfig run = spanex::RunConfig::resolve(cfg);
  const std::string data = data_path.empty() ? run.train_path : data_path;
  if (data.empty())
    throw spanex::ConfigError("audit needs corpus.train or --data");
  run.require_file(data, "corpus.train");

  std::optional<spanex::LabelVocab> pinned;
  if (!run.vocab_path.empty()) pinned = spanex::load_vocab(run.vocab_path);
  auto [corpus, vocab] = spanex::load_corpus(data, pinned);

  const spanex::AuditCounts counts =
      spanex::collect_audit_counts(corpus, vocab, run);
  std::cout << "class counts under training sampling (seed "
            << run.sampling_seed << "):\n"
            << spanex::format_audit_counts(counts) << "\n";

  nlohmann::json doc;
  doc["counts"] = spanex::audit_report_to_json(
      spanex::AuditReport{"counts", counts, {}})["counts"];
  std::vector<spanex::AuditReport> reports;
  for (const char* mode : {"baseline", "phase_one", "phase_two"}) {
    try {
      reports.push_back(spanex::audit_distributions(counts, mode));
      doc["modes"][mode] = spanex::audit_report_to_json(reports.back())["ratios"];
    } catch (const spanex::ValidationError& e) {
      // Degenerate class counts leave a mode without a defined ratio.
      reports.push_back(spanex::AuditReport{mode, counts, {}});
      doc["modes"][mode] = {{"error", e.what()}};
    }
  }
  std::cout << "imbalance ratios\n" << spanex::markdown_audit_table(reports);

  const auto stats = spanex::distance_type_stats(corpus);
  std::cout << "\nrelation distance distribution\n"
            << spanex::markdown_distance_type_table(stats);
  doc["distance_type_stats"] = spanex::distance_type_stats_to_json(stats);

  const std::string json_path = run.output_dir + "/audit.json";
  write_json_file(json_path, doc);
  std::cout << "\nreport written to " << json_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"span-based joint entity and relation extraction"};
  app.require_subcommand(1);

  std::string config_path, model_dir, data_path, input_path, output_path;
  std::string json_path;
  std::vector<std::string> overrides;
  bool by_length = false, by_distance = false;

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config_path, "config file")->required();
  train_cmd->add_option("--set", overrides,
                        "override `key=value` (repeatable)");

  auto* eval_cmd =
      app.add_subcommand("evaluate", "score a checkpoint against gold data");
  eval_cmd->add_option("--model", model_dir, "checkpoint directory")
      ->required();
  eval_cmd->add_option("--data", data_path,
                       "gold corpus (defaults to corpus.test)");
  eval_cmd->add_option("--set", overrides, "override `key=value`");
  eval_cmd->add_flag("--by-length", by_length, "entity F1 per mention length");
  eval_cmd->add_flag("--by-distance", by_distance,
                     "relation F1 per entity distance");
  eval_cmd->add_option("--json", json_path, "where to write the JSON report");

  auto* predict_cmd =
      app.add_subcommand("predict", "annotate JSON-lines input");
  predict_cmd->add_option("--model", model_dir, "checkpoint directory")
      ->required();
  predict_cmd->add_option("--input", input_path, "JSON-lines input")
      ->required();
  predict_cmd->add_option("--output", output_path,
                          "output path ('-' for stdout)");

  auto* audit_cmd =
      app.add_subcommand("audit", "class-distribution and distance reports");
  audit_cmd->add_option("--config", config_path, "config file")->required();
  audit_cmd->add_option("--set", overrides, "override `key=value`");
  audit_cmd->add_option("--data", data_path,
                        "corpus to audit (defaults to corpus.train)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, overrides);
    if (eval_cmd->parsed())
      return cmd_evaluate(model_dir, data_path, overrides, by_length,
                          by_distance, json_path);
    if (predict_cmd->parsed())
      return cmd_predict(model_dir, input_path, output_path);
    if (audit_cmd->parsed())
      return cmd_audit(config_path, overrides, data_path);
  } catch (const spanex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
