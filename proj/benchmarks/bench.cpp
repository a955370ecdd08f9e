#include <random>
#include <sstream>

#include <benchmark/benchmark.h>

#include "ner/corpus.hpp"
#include "ner/model.hpp"
#include "ner/scorer.hpp"

namespace {

ner::Corpus make_corpus(int sentences, int tokens_per_sentence) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> tag_id(0,
                                            static_cast<int>(ner::kTagsetSize) -
                                                1);
  std::uniform_int_distribution<int> ch('a', 'j');
  ner::Corpus corpus;
  for (int s = 0; s < sentences; ++s) {
    ner::Sentence sentence;
    sentence.id = "s" + std::to_string(s);
    for (int t = 0; t < tokens_per_sentence; ++t) {
      std::string word;
      for (int k = 0; k < 5; ++k) word += static_cast<char>(ch(rng));
      sentence.tokens.push_back({word, ner::tag_from_id(tag_id(rng))});
    }
    std::vector<ner::BioTag> tags;
    for (const ner::Token& tok : sentence.tokens) tags.push_back(tok.tag);
    tags = ner::repair_bio(tags);
    for (std::size_t k = 0; k < tags.size(); ++k) {
      sentence.tokens[k].tag = tags[k];
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

void BM_ParseConll(benchmark::State& state) {
  std::string text = ner::serialize_conll(make_corpus(500, 12));
  for (auto _ : state) {
    ner::Corpus c = ner::parse_conll(text);
    benchmark::DoNotOptimize(c);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ParseConll);

void BM_MacroScore(benchmark::State& state) {
  ner::Corpus gold = make_corpus(500, 12);
  ner::Corpus pred = make_corpus(500, 12);  // same ids/words, fresh tags
  for (auto _ : state) {
    ner::ScoreReport r =
        ner::macro_report(gold, pred, ner::Granularity::Fine);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_MacroScore);

void BM_ForwardPass(benchmark::State& state) {
  ner::Corpus corpus = make_corpus(64, 12);
  ner::Vocab vocab = ner::build_vocab(corpus, 500);
  ner::ModelConfig config;
  config.vocab_size = static_cast<int>(vocab.size());
  config.seed = 2;
  ner::ModelParams params = ner::init_params(config);
  std::vector<ner::EncodedSentence> batch;
  for (int i = 0; i < 4; ++i) {
    batch.push_back(
        ner::encode_sentence(corpus.sentences[i], vocab, config));
  }
  for (auto _ : state) {
    auto logits = ner::forward(params, config, batch);
    benchmark::DoNotOptimize(logits);
  }
}
BENCHMARK(BM_ForwardPass);

}  // namespace

BENCHMARK_MAIN();
