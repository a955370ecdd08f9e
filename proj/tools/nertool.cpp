#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ner/corpus.hpp"
#include "ner/noise.hpp"
#include "ner/optim.hpp"
#include "ner/scorer.hpp"
#include "ner/taxonomy.hpp"

namespace {

// Exit codes: 0 success, 1 usage error, 2 validation failure,
// 3 runtime/numeric failure.
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kValidationError = 2;
constexpr int kRuntimeError = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("NERTOOL_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

std::set<std::string> read_id_file(const std::string& path) {
  std::set<std::string> ids;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return ids;
}

int run_stats(const std::string& path, const std::string& json_out) {
  ner::Corpus corpus = ner::parse_conll(read_file(path));
  ner::CorpusStats stats = ner::corpus_stats(corpus);
  std::cout << "sentences: " << stats.sentence_count << "\n";
  std::cout << "tokens:    " << stats.token_count << "\n";
  for (const auto& [fine, count] : stats.span_counts) {
    std::cout << ner::to_string(fine) << ": " << count << "\n";
  }
  if (!json_out.empty()) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [fine, count] : stats.span_counts) {
      classes[std::string(ner::to_string(fine))] = count;
    }
    nlohmann::json j = {{"sentences", stats.sentence_count},
                        {"tokens", stats.token_count},
                        {"spans", classes}};
    write_file(json_out, j.dump(2) + "\n");
  }
  return kOk;
}

int run_validate(const std::string& path, bool strict) {
  ner::ValidationReport report = ner::validate_conll(read_file(path));
  for (const ner::Violation& v : report.violations) {
    std::cout << v.sentence_id << "\t" << v.token_index << "\t"
              << ner::to_string(v.kind) << "\n";
  }
  if (report.ok()) {
    std::cout << "valid\n";
    return kOk;
  }
  std::cout << report.violations.size() << " violation(s)\n";
  return strict ? kValidationError : kOk;
}

int run_taxonomy_dump() {
  for (ner::FineType fine : ner::fine_labels()) {
    std::cout << ner::to_string(fine) << "\t"
              << ner::to_string(ner::coarse_of(fine)) << "\n";
  }
  return kOk;
}

struct TrainArgs {
  std::string train_path, dev_path, out_path, history_path;
  ner::TrainConfig train_config;
  ner::ModelConfig model_config;
};

int run_train(const TrainArgs& args) {
  ner::Corpus train_corpus = ner::parse_conll(read_file(args.train_path));
  ner::Corpus dev_corpus = ner::parse_conll(read_file(args.dev_path));
  ner::TrainResult result =
      ner::train(train_corpus, dev_corpus, args.train_config,
                 args.model_config);
  std::string history;
  for (const ner::EpochStats& s : result.history) {
    char line[96];
    std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\n", s.epoch, s.mean_loss,
                  s.dev_macro_f1);
    history += line;
    std::cout << line;
  }
  if (!args.history_path.empty()) write_file(args.history_path, history);
  ner::save_checkpoint(result.best, args.out_path);
  std::cout << "best epoch " << result.best.epoch << " dev macro-f1 "
            << result.best.dev_f1 << " -> " << args.out_path << "\n";
  return kOk;
}

int run_predict(const std::string& ckpt_path, const std::string& input_path,
                const std::string& out_path) {
  ner::Checkpoint ckpt = ner::load_checkpoint(ckpt_path);
  ner::Corpus corpus = ner::parse_conll(read_file(input_path));
  for (ner::Sentence& sentence : corpus.sentences) {
    std::vector<ner::BioTag> tags =
        ner::predict(ckpt.params, ckpt.config, sentence, ckpt.vocab);
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      sentence.tokens[i].tag = tags[i];
    }
  }
  write_file(out_path, ner::serialize_conll(corpus));
  return kOk;
}

int run_score(const std::string& gold_path, const std::string& pred_path,
              bool coarse, const std::string& corrupted_ids_path,
              bool full_universe, const std::string& json_out) {
  ner::Corpus gold = ner::parse_conll(read_file(gold_path));
  ner::Corpus pred = ner::parse_conll(read_file(pred_path));
  ner::Granularity granularity =
      coarse ? ner::Granularity::Coarse : ner::Granularity::Fine;
  if (corrupted_ids_path.empty()) {
    ner::ScoreReport report =
        ner::macro_report(gold, pred, granularity, full_universe);
    std::cout << ner::render_report(report);
    if (!json_out.empty()) {
      write_file(json_out, ner::report_to_json(report) + "\n");
    }
  } else {
    ner::SplitScoreReport report =
        ner::split_report(gold, pred, read_id_file(corrupted_ids_path),
                          granularity, full_universe);
    std::cout << ner::render_split_report(report);
    if (!json_out.empty()) {
      write_file(json_out, ner::split_report_to_json(report) + "\n");
    }
  }
  return kOk;
}

int run_corrupt(const std::string& input_path, const std::string& out_path,
                const std::string& ids_out_path, double rate,
                std::uint64_t seed) {
  ner::Corpus corpus = ner::parse_conll(read_file(input_path));
  ner::NoiseConfig config;
  config.rate = rate;
  config.seed = seed;
  auto [corrupted, membership] = ner::corrupt_corpus(corpus, config);
  write_file(out_path, ner::serialize_conll(corrupted));
  std::string ids;
  for (const std::string& id : membership) ids += id + "\n";
  write_file(ids_out_path, ids);
  std::cout << membership.size() << " of " << corpus.sentences.size()
            << " sentences corrupted\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual NER toolkit: CoNLL ingestion, transformer "
               "training, entity-level macro-F1 scoring, typo simulation"};
  app.require_subcommand(1);

  std::string stats_file, stats_json;
  CLI::App* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("file", stats_file, "CoNLL file")->required();
  stats->add_option("--json-out", stats_json, "Write machine-readable stats");

  std::string validate_file;
  bool strict = false;
  CLI::App* validate = app.add_subcommand("validate", "Check a CoNLL file");
  validate->add_option("file", validate_file, "CoNLL file")->required();
  validate->add_flag("--strict", strict, "Nonzero exit on any violation");

  TrainArgs targs;
  targs.train_config.seed = default_seed();
  targs.model_config.seed = default_seed();
  CLI::App* train = app.add_subcommand("train", "Train a token classifier");
  train->add_option("--train", targs.train_path, "Training CoNLL file")
      ->required();
  train->add_option("--dev", targs.dev_path, "Development CoNLL file")
      ->required();
  train->add_option("--out", targs.out_path, "Checkpoint output path")
      ->required();
  train->add_option("--history", targs.history_path,
                    "Write per-epoch loss/dev-F1 log");
  train->add_option("--epochs", targs.train_config.epochs, "Training epochs")
      ->capture_default_str();
  train->add_option("--batch-size", targs.train_config.batch_size,
                    "Sentences per batch")
      ->capture_default_str();
  train->add_option("--lr", targs.train_config.hyper.lr, "Learning rate")
      ->capture_default_str();
  train->add_option("--weight-decay", targs.train_config.hyper.weight_decay,
                    "Decoupled weight decay")
      ->capture_default_str();
  train->add_option("--epsilon", targs.train_config.hyper.epsilon,
                    "AdamW epsilon")
      ->capture_default_str();
  train->add_option("--dropout", targs.model_config.dropout,
                    "Dropout before the output layer")
      ->capture_default_str();
  train->add_option("--max-len", targs.model_config.max_len,
                    "Maximum subword positions")
      ->capture_default_str();
  train->add_option("--d-model", targs.model_config.d_model, "Model width")
      ->capture_default_str();
  train->add_option("--layers", targs.model_config.n_layers, "Encoder layers")
      ->capture_default_str();
  train->add_option("--heads", targs.model_config.n_heads, "Attention heads")
      ->capture_default_str();
  train->add_option("--d-ff", targs.model_config.d_ff, "Feed-forward width")
      ->capture_default_str();
  train->add_option("--vocab-size", targs.train_config.vocab_size,
                    "Maximum subword vocabulary size")
      ->capture_default_str();
  std::uint64_t train_seed = default_seed();
  train->add_option("--seed", train_seed, "RNG seed")->capture_default_str();

  std::string ckpt_path, predict_in, predict_out;
  CLI::App* predict = app.add_subcommand("predict", "Tag a CoNLL file");
  predict->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  predict->add_option("--input", predict_in, "Input CoNLL file")->required();
  predict->add_option("--out", predict_out, "Prediction output")->required();

  std::string gold_path, pred_path, corrupted_ids_path, score_json;
  bool coarse = false, full_universe = false;
  CLI::App* score = app.add_subcommand("score", "Entity-level macro P/R/F1");
  score->add_option("--gold", gold_path, "Gold CoNLL file")->required();
  score->add_option("--pred", pred_path, "Prediction CoNLL file")->required();
  score->add_flag("--coarse", coarse, "Score at coarse granularity");
  score->add_option("--corrupted-ids", corrupted_ids_path,
                    "Sentence-id file for the corrupted split");
  score->add_flag("--full-universe", full_universe,
                  "Average over every class, not just observed ones");
  score->add_option("--json-out", score_json, "Write machine-readable report");

  std::string corrupt_in, corrupt_out, ids_out;
  double rate = 0.0;
  std::uint64_t corrupt_seed = default_seed();
  CLI::App* corrupt = app.add_subcommand("corrupt", "Inject simulated typos");
  corrupt->add_option("--input", corrupt_in, "Input CoNLL file")->required();
  corrupt->add_option("--out", corrupt_out, "Corrupted output")->required();
  corrupt->add_option("--ids-out", ids_out, "Corrupted-sentence id list")
      ->required();
  corrupt->add_option("--rate", rate, "Per-token corruption probability")
      ->required();
  corrupt->add_option("--seed", corrupt_seed, "RNG seed")
      ->capture_default_str();

  CLI::App* taxonomy =
      app.add_subcommand("taxonomy-dump", "Print fine-to-coarse mapping");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*stats) return run_stats(stats_file, stats_json);
    if (*validate) return run_validate(validate_file, strict);
    if (*train) {
      targs.train_config.seed = train_seed;
      targs.model_config.seed = train_seed;
      return run_train(targs);
    }
    if (*predict) return run_predict(ckpt_path, predict_in, predict_out);
    if (*score) {
      return run_score(gold_path, pred_path, coarse, corrupted_ids_path,
                       full_universe, score_json);
    }
    if (*corrupt) {
      return run_corrupt(corrupt_in, corrupt_out, ids_out, rate, corrupt_seed);
    }
    if (*taxonomy) return run_taxonomy_dump();
  } catch (const ner::ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line() << ")\n";
    return kValidationError;
  } catch (const ner::AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
