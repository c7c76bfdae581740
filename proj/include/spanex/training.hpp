#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanex/autograd.hpp"
#include "spanex/candidates.hpp"
#include "spanex/config.hpp"
#include "spanex/corpus.hpp"
#include "spanex/encoder.hpp"
#include "spanex/error.hpp"
#include "spanex/evaluation.hpp"
#include "spanex/model.hpp"
#include "spanex/parameters.hpp"
#include "spanex/random.hpp"
#include "spanex/types.hpp"

namespace spanex {

// --- loss primitives ---------------------------------------------------------

constexpr double kProbFloor = 1e-7;
constexpr double kProbCeiling = 1.0 - 1e-7;

inline double clamp_prob(double p) {
  return std::min(std::max(p, kProbFloor), kProbCeiling);
}

// Per-instance binary loss over a two-way head: both class activations are
// treated as independent Bernoulli outputs.
inline double binary_instance_loss(const std::array<double, 2>& probs,
                                   const std::array<double, 2>& targets) {
  double loss = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double p = clamp_prob(probs[j]);
    loss -= targets[j] * std::log(p) + (1.0 - targets[j]) * std::log(1.0 - p);
  }
  return loss;
}

inline double cross_entropy_instance_loss(const std::vector<double>& probs,
                                          int target) {
  if (target < 0 || target >= static_cast<int>(probs.size()))
    throw IndexError("cross-entropy target " + std::to_string(target) +
                     " outside " + std::to_string(probs.size()) + " classes");
  return -std::log(clamp_prob(probs[target]));
}

// Tape counterparts, differentiable end to end.
inline Var tape_binary_loss(Tape& tape, Var logits, bool positive) {
  const Var probs =
      tape.clamp(tape.sigmoid(logits), kProbFloor, kProbCeiling);
  const std::vector<double> y =
      positive ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
  const Var hit = tape.coord_dot(tape.log_(probs), y);
  const Var miss =
      tape.coord_dot(tape.log_(tape.one_minus(probs)), {1.0 - y[0], 1.0 - y[1]});
  return tape.scale(tape.add(hit, miss), -1.0);
}

inline Var tape_cross_entropy_loss(Tape& tape, Var logits, int target) {
  const Var probs =
      tape.clamp(tape.softmax(logits), kProbFloor, kProbCeiling);
  return tape.scale(tape.pick(tape.log_(probs), target), -1.0);
}

// --- teacher-forced training instances ----------------------------------------

struct SentenceInstances {
  const Sentence* sentence = nullptr;
  std::vector<SpanSample> spans;
  std::vector<RelationCandidate> relations;
};

// Candidate sampling draws from a stream derived from (seed, epoch, corpus
// position), so batching and shuffling leave the samples untouched.
inline SentenceInstances assemble_instances(
    const Sentence& sentence, const LabelVocab& vocab, int max_span_width,
    long neg_entities, long neg_relations, std::uint64_t sampling_seed,
    std::uint64_t epoch, std::uint64_t corpus_index) {
  const std::uint64_t epoch_seed = derive_seed(sampling_seed, "epoch", epoch);
  auto span_rng = make_rng(derive_seed(epoch_seed, "entities", corpus_index));
  auto rel_rng = make_rng(derive_seed(epoch_seed, "relations", corpus_index));
  SentenceInstances inst;
  inst.sentence = &sentence;
  const auto enumerated = enumerate_spans(sentence.length(), max_span_width);
  inst.spans = sample_negative_spans(sentence, enumerated, neg_entities, vocab,
                                     span_rng);
  inst.relations =
      sample_negative_relations(sentence, neg_relations, vocab, rel_rng);
  return inst;
}

inline std::vector<SentenceInstances> assemble_batch(
    const std::vector<Sentence>& corpus, const std::vector<std::size_t>& batch,
    const LabelVocab& vocab, const RunConfig& run, std::uint64_t epoch) {
  std::vector<SentenceInstances> out;
  out.reserve(batch.size());
  for (std::size_t idx : batch)
    out.push_back(assemble_instances(corpus[idx], vocab, run.max_span_width,
                                     run.neg_entities, run.neg_relations,
                                     run.sampling_seed, epoch, idx));
  return out;
}

// Class counts as the first training epoch would see them: gold positives
// per type plus the sampled negative classes. Reproducible per seed.
inline AuditCounts collect_audit_counts(const std::vector<Sentence>& corpus,
                                        const LabelVocab& vocab,
                                        const RunConfig& run) {
  AuditCounts out;
  for (const auto& name : vocab.entity_types()) out.entity_types[name] = 0;
  for (const auto& name : vocab.relation_types()) out.relation_types[name] = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SentenceInstances inst = assemble_instances(
        corpus[i], vocab, run.max_span_width, run.neg_entities,
        run.neg_relations, run.sampling_seed, /*epoch=*/0, i);
    for (const auto& sample : inst.spans) {
      if (sample.is_entity)
        ++out.entity_types[vocab.entity_name(*sample.gold_type)];
      else
        ++out.not_entity;
    }
    for (const auto& cand : inst.relations) {
      if (cand.is_relation)
        ++out.relation_types[vocab.relation_name(*cand.gold_type)];
      else
        ++out.not_relation;
    }
  }
  return out;
}

// --- joint loss ----------------------------------------------------------------

// Means of the per-instance losses of each task present in the batch.
// total() preserves the summation order of the tape so the two stay
// bit-identical.
struct LossReport {
  double entity_binary = 0.0;
  double relation_binary = 0.0;
  double entity_type = 0.0;
  double relation_type = 0.0;
  double total() const {
    return entity_binary + relation_binary + entity_type + relation_type;
  }
};

struct BatchLoss {
  Var total;
  LossReport report;
};

// Builds every candidate representation of the batch on one tape and wires
// the four losses over them. The identical graph serves a gradient step and
// the finite-difference comparison in the tests.
inline BatchLoss build_batch_loss(
    Tape& tape, const Model& model,
    const std::vector<SentenceInstances>& batch) {
  std::vector<Var> entity_binary, relation_binary, entity_type, relation_type;
  for (const auto& inst : batch) {
    const TokenEmbeddingSequence seq = model.encode(tape, *inst.sentence);
    std::map<Span, SpanRep> reps;
    for (const auto& sample : inst.spans) {
      auto [it, inserted] = reps.try_emplace(sample.span);
      if (inserted)
        it->second = model.span_representation(tape, seq, sample.span);
      const SpanRep& rep = it->second;
      if (model.two_phase()) {
        entity_binary.push_back(tape_binary_loss(
            tape, model.entity_binary_logits(tape, rep), sample.is_entity));
        if (sample.is_entity)
          entity_type.push_back(tape_cross_entropy_loss(
              tape, model.entity_type_logits(tape, rep), *sample.gold_type));
      } else {
        const int target =
            sample.is_entity ? *sample.gold_type : model.not_entity_id();
        entity_type.push_back(tape_cross_entropy_loss(
            tape, model.entity_type_logits(tape, rep), target));
      }
    }
    for (const auto& cand : inst.relations) {
      auto rep_of = [&](const Span& span) -> const SpanRep& {
        auto [it, inserted] = reps.try_emplace(span);
        if (inserted) it->second = model.span_representation(tape, seq, span);
        return it->second;
      };
      const Var rel_rep = model.relation_representation(
          tape, seq, rep_of(cand.head), rep_of(cand.tail));
      if (model.two_phase()) {
        relation_binary.push_back(tape_binary_loss(
            tape, model.relation_binary_logits(tape, rel_rep),
            cand.is_relation));
        if (cand.is_relation) {
          const Var type_in =
              model.relation_type_input(tape, rel_rep, *cand.head_type,
                                        *cand.tail_type, cand.distance_bucket);
          relation_type.push_back(tape_cross_entropy_loss(
              tape, model.relation_type_logits(tape, type_in),
              *cand.gold_type));
        }
      } else {
        const Var type_in =
            model.relation_type_input(tape, rel_rep, *cand.head_type,
                                      *cand.tail_type, cand.distance_bucket);
        const int target =
            cand.is_relation ? *cand.gold_type : model.not_relation_id();
        relation_type.push_back(tape_cross_entropy_loss(
            tape, model.relation_type_logits(tape, type_in), target));
      }
    }
  }

  auto mean_of = [&](const std::vector<Var>& losses) -> std::optional<Var> {
    if (losses.empty()) return std::nullopt;
    return tape.scale(tape.add(losses), 1.0 / losses.size());
  };

  BatchLoss out;
  std::vector<Var> components;
  double* slots[] = {&out.report.entity_binary, &out.report.relation_binary,
                     &out.report.entity_type, &out.report.relation_type};
  const std::vector<Var>* lists[] = {&entity_binary, &relation_binary,
                                     &entity_type, &relation_type};
  for (int i = 0; i < 4; ++i) {
    if (auto mean = mean_of(*lists[i])) {
      components.push_back(*mean);
      *slots[i] = tape.scalar(*mean);
    }
  }
  out.total = components.empty() ? tape.input({0.0}) : tape.add(components);
  return out;
}

// --- optimizer -------------------------------------------------------------------

struct OptimizerSettings {
  double learning_rate = 5e-5;
  double weight_decay = 1e-2;
  double warmup_fraction = 0.1;
  long total_steps = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// AdamW with decoupled weight decay on every parameter and a linear warmup
// into a constant learning rate.
class AdamW {
 public:
  AdamW(ParamStore* store, OptimizerSettings settings)
      : store_(store),
        settings_(settings),
        m_(store->count(), 0.0),
        v_(store->count(), 0.0),
        warmup_steps_(static_cast<long>(
            std::llround(settings.warmup_fraction * settings.total_steps))) {}

  double learning_rate_at(long step) const {
    if (warmup_steps_ > 0 && step <= warmup_steps_)
      return settings_.learning_rate * static_cast<double>(step) /
             static_cast<double>(warmup_steps_);
    return settings_.learning_rate;
  }

  long steps_taken() const { return step_; }

  void step() {
    ++step_;
    const double lr = learning_rate_at(step_);
    const double bc1 = 1.0 - std::pow(settings_.beta1, step_);
    const double bc2 = 1.0 - std::pow(settings_.beta2, step_);
    auto& values = store_->raw_values();
    const auto& grads = store_->raw_grads();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m_[i] = settings_.beta1 * m_[i] + (1.0 - settings_.beta1) * g;
      v_[i] = settings_.beta2 * v_[i] + (1.0 - settings_.beta2) * g * g;
      const double update = (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) +
                                             settings_.epsilon);
      values[i] -= lr * (update + settings_.weight_decay * values[i]);
    }
  }

 private:
  ParamStore* store_;
  OptimizerSettings settings_;
  std::vector<double> m_;
  std::vector<double> v_;
  long warmup_steps_ = 0;
  long step_ = 0;
};

// --- checkpoints -------------------------------------------------------------------

// Everything the parameter layout depends on. Loading refuses to proceed
// when any field differs from the model rebuilt out of the stored config.
struct Fingerprint {
  int dim = 0;
  int max_span_width = 0;
  int num_entity_types = 0;
  int num_relation_types = 0;
  int num_distance_buckets = kNumDistanceBuckets;
  AblationFlags flags;
  bool share_fusion_params = false;
  std::string encoder_kind;
  std::uint64_t param_count = 0;

  static Fingerprint of(const Model& model, const ParamStore& store) {
    Fingerprint f;
    f.dim = model.dim();
    f.max_span_width = model.config().max_span_width;
    f.num_entity_types = model.vocab().num_entity_types();
    f.num_relation_types = model.vocab().num_relation_types();
    f.flags = model.config().flags;
    f.share_fusion_params = model.config().share_fusion_params;
    f.encoder_kind = model.encoder().kind();
    f.param_count = store.count();
    return f;
  }

  nlohmann::json to_json() const {
    return {{"dim", dim},
            {"max_span_width", max_span_width},
            {"num_entity_types", num_entity_types},
            {"num_relation_types", num_relation_types},
            {"num_distance_buckets", num_distance_buckets},
            {"two_phase", flags.two_phase},
            {"bi_features", flags.bi_features},
            {"multi_features", flags.multi_features},
            {"gated_fusion", flags.gated_fusion},
            {"share_fusion_params", share_fusion_params},
            {"encoder_kind", encoder_kind},
            {"param_count", param_count}};
  }

  static Fingerprint from_json(const nlohmann::json& j) {
    Fingerprint f;
    f.dim = j.at("dim").get<int>();
    f.max_span_width = j.at("max_span_width").get<int>();
    f.num_entity_types = j.at("num_entity_types").get<int>();
    f.num_relation_types = j.at("num_relation_types").get<int>();
    f.num_distance_buckets = j.at("num_distance_buckets").get<int>();
    f.flags.two_phase = j.at("two_phase").get<bool>();
    f.flags.bi_features = j.at("bi_features").get<bool>();
    f.flags.multi_features = j.at("multi_features").get<bool>();
    f.flags.gated_fusion = j.at("gated_fusion").get<bool>();
    f.share_fusion_params = j.at("share_fusion_params").get<bool>();
    f.encoder_kind = j.at("encoder_kind").get<std::string>();
    f.param_count = j.at("param_count").get<std::uint64_t>();
    return f;
  }

  // Human-readable list of differing fields, "name: ours vs theirs".
  std::vector<std::string> diff(const Fingerprint& other) const {
    std::vector<std::string> out;
    auto cmp = [&out](const char* name, auto a, auto b) {
      if (a != b) {
        std::ostringstream oss;
        oss << name << ": " << a << " vs " << b;
        out.push_back(oss.str());
      }
    };
    cmp("dim", dim, other.dim);
    cmp("max_span_width", max_span_width, other.max_span_width);
    cmp("num_entity_types", num_entity_types, other.num_entity_types);
    cmp("num_relation_types", num_relation_types, other.num_relation_types);
    cmp("num_distance_buckets", num_distance_buckets,
        other.num_distance_buckets);
    cmp("two_phase", flags.two_phase, other.flags.two_phase);
    cmp("bi_features", flags.bi_features, other.flags.bi_features);
    cmp("multi_features", flags.multi_features, other.flags.multi_features);
    cmp("gated_fusion", flags.gated_fusion, other.flags.gated_fusion);
    cmp("share_fusion_params", share_fusion_params,
        other.share_fusion_params);
    cmp("encoder_kind", encoder_kind, other.encoder_kind);
    cmp("param_count", param_count, other.param_count);
    return out;
  }
};

inline void save_checkpoint(const std::string& dir, const Config& config,
                            const Model& model, const ParamStore& store) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  store.save(dir + "/params.bin");
  {
    std::ofstream out(dir + "/config.cfg");
    if (!out) throw CheckpointError("cannot write '" + dir + "/config.cfg'");
    out << config.serialize();
  }
  save_vocab(model.vocab(), dir + "/vocab.txt");
  {
    std::ofstream out(dir + "/tokens.txt");
    if (!out) throw CheckpointError("cannot write '" + dir + "/tokens.txt'");
    if (const auto* toy = dynamic_cast<const ToyEncoder*>(&model.encoder()))
      for (const auto& token : toy->token_vocab().tokens()) out << token << "\n";
  }
  {
    std::ofstream out(dir + "/fingerprint.json");
    if (!out)
      throw CheckpointError("cannot write '" + dir + "/fingerprint.json'");
    out << Fingerprint::of(model, store).to_json().dump(2) << "\n";
  }
}

struct LoadedModel {
  Config config;
  RunConfig run;
  Model model;
  ParamStore store;
};

inline LoadedModel load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  for (const char* name :
       {"params.bin", "config.cfg", "vocab.txt", "fingerprint.json"})
    if (!fs::exists(dir + "/" + name))
      throw CheckpointError("checkpoint '" + dir + "' is missing " + name);

  Config config = Config::from_file(dir + "/config.cfg");
  RunConfig run = RunConfig::resolve(config);
  LabelVocab vocab = load_vocab(dir + "/vocab.txt");

  nlohmann::json fj;
  {
    std::ifstream in(dir + "/fingerprint.json");
    try {
      in >> fj;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("cannot parse '" + dir + "/fingerprint.json': " +
                            e.what());
    }
  }
  const Fingerprint saved = Fingerprint::from_json(fj);

  // Rebuild strictly from the stored config; the fingerprint is only a
  // witness, so any tampering shows up as a field mismatch below.
  std::shared_ptr<EncoderAdapter> encoder;
  if (run.encoder_kind == "toy") {
    if (!fs::exists(dir + "/tokens.txt"))
      throw CheckpointError("checkpoint '" + dir + "' is missing tokens.txt");
    std::ifstream in(dir + "/tokens.txt");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(line);
    }
    encoder = std::make_shared<ToyEncoder>(TokenVocab::from_tokens(tokens),
                                           run.encoder_dim,
                                           run.encoder_max_len);
  } else {
    encoder = std::make_shared<PretrainedEncoder>(run.encoder_embeddings);
  }

  Model model = make_model(run, vocab, std::move(encoder));
  ParamStore store;
  model.register_parameters(store);
  const Fingerprint rebuilt = Fingerprint::of(model, store);
  const auto mismatches = saved.diff(rebuilt);
  if (!mismatches.empty()) {
    std::string msg =
        "checkpoint '" + dir + "' does not match the rebuilt model:";
    for (const auto& m : mismatches) msg += " [" + m + "]";
    throw CheckpointError(msg);
  }
  store.load(dir + "/params.bin");
  return LoadedModel{std::move(config), std::move(run), std::move(model),
                     std::move(store)};
}

// --- training loop -------------------------------------------------------------------

struct EpochRecord {
  long epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_entity_f1;
  std::optional<double> dev_relation_f1;
  bool best = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::string final_dir;
  std::optional<std::string> best_dir;
  long steps = 0;
};

inline MatchPolicy policy_from_run(const RunConfig& run) {
  MatchPolicy policy = MatchPolicy::preset(run.eval_policy);
  policy.symmetric_relations.insert(run.symmetric_relations.begin(),
                                    run.symmetric_relations.end());
  return policy;
}

// Full training run driven by a merged configuration. `config` is persisted
// verbatim into every checkpoint so a run can be rebuilt from its artifacts.
inline TrainResult train(const Config& config, std::ostream* log = nullptr) {
  const RunConfig run = RunConfig::resolve(config);
  run.train.validate();
  if (run.train_path.empty()) throw ConfigError("corpus.train is required");
  run.require_file(run.train_path, "corpus.train");

  std::optional<LabelVocab> pinned;
  if (!run.vocab_path.empty()) pinned = load_vocab(run.vocab_path);
  auto [train_sentences, vocab] = load_corpus(run.train_path, pinned);
  if (train_sentences.empty())
    throw ValidationError("training corpus '" + run.train_path + "' is empty");

  std::vector<Sentence> dev_sentences;
  if (!run.dev_path.empty())
    dev_sentences = load_corpus(run.dev_path, vocab).first;

  Model model = make_model(run, vocab, make_encoder(run, train_sentences));
  ParamStore store;
  model.register_parameters(store);
  store.initialize(run.train.seed);

  const std::size_t n = train_sentences.size();
  const std::size_t batch_size = static_cast<std::size_t>(run.train.batch_size);
  const long steps_per_epoch = static_cast<long>((n + batch_size - 1) / batch_size);
  OptimizerSettings opt_settings;
  opt_settings.learning_rate = run.train.learning_rate;
  opt_settings.weight_decay = run.train.weight_decay;
  opt_settings.warmup_fraction = run.train.warmup_fraction;
  opt_settings.total_steps = run.train.epochs * steps_per_epoch;
  AdamW optimizer(&store, opt_settings);

  std::filesystem::create_directories(run.output_dir);
  std::ofstream metrics(run.output_dir + "/metrics.jsonl");
  if (!metrics)
    throw Error("cannot write '" + run.output_dir + "/metrics.jsonl'");

  const MatchPolicy policy = policy_from_run(run);
  TrainResult result;
  double best_relation_f1 = -1.0;
  double best_entity_f1 = -1.0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (long epoch = 0; epoch < run.train.epochs; ++epoch) {
    auto shuffle_rng = make_rng(
        derive_seed(run.train.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_inplace(order, shuffle_rng);

    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t offset = 0; offset < n; offset += batch_size) {
      const std::size_t hi = std::min(n, offset + batch_size);
      const std::vector<std::size_t> batch(order.begin() + offset,
                                           order.begin() + hi);
      const auto instances = assemble_batch(train_sentences, batch, vocab, run,
                                            static_cast<std::uint64_t>(epoch));
      Tape tape(&store);
      const BatchLoss loss = build_batch_loss(tape, model, instances);
      const double total = tape.scalar(loss.total);
      if (!std::isfinite(total))
        throw DivergenceError("loss diverged at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batches));
      store.zero_grads();
      tape.backward(loss.total);
      optimizer.step();
      loss_sum += total;
      ++batches;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = batches > 0 ? loss_sum / batches : 0.0;

    nlohmann::json line;
    line["epoch"] = epoch;
    line["train_loss"] = record.train_loss;
    if (!dev_sentences.empty()) {
      std::vector<Sentence> predictions;
      predictions.reserve(dev_sentences.size());
      for (const auto& s : dev_sentences)
        predictions.push_back(model.forward_inference(store, s));
      const ScoreReport dev = score(dev_sentences, predictions, policy);
      record.dev_entity_f1 = dev.entity.f1();
      record.dev_relation_f1 = dev.relation.f1();
      line["dev_entity_f1"] = *record.dev_entity_f1;
      line["dev_relation_f1"] = *record.dev_relation_f1;
      const bool better =
          *record.dev_relation_f1 > best_relation_f1 ||
          (*record.dev_relation_f1 == best_relation_f1 &&
           *record.dev_entity_f1 > best_entity_f1);
      if (better) {
        best_relation_f1 = *record.dev_relation_f1;
        best_entity_f1 = *record.dev_entity_f1;
        record.best = true;
        result.best_dir = run.output_dir + "/best";
        save_checkpoint(*result.best_dir, config, model, store);
      }
      line["best"] = record.best;
    }
    metrics << line.dump() << "\n";
    if (log)
      *log << "epoch " << epoch << " loss " << record.train_loss
           << (record.best ? " (best)" : "") << "\n";
    result.history.push_back(record);
  }

  result.steps = optimizer.steps_taken();
  result.final_dir = run.output_dir + "/final";
  save_checkpoint(result.final_dir, config, model, store);
  return result;
}

}  // namespace spanex
