#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mug/data/corpus.h"
#include "mug/data/synthetic.h"
#include "mug/errors.h"
#include "mug/parser/parser.h"

using namespace mug;
using namespace mug::data;

namespace {

Sentence make(std::size_t n, std::vector<Triplet> triplets = {}) {
  Sentence s;
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back("t" + std::to_string(i));
  s.triplets = std::move(triplets);
  return s;
}

Triplet pos(std::size_t a0, std::size_t a1, std::size_t o0, std::size_t o1) {
  return {{a0, a1}, {o0, o1}, Sentiment::kPositive};
}

}  // namespace

TEST_CASE("parse_record examples") {
  const Sentence s = parse_record(
      R"({"tokens":["Great","food"],"triplets":[{"aspect":[1,1],"opinion":[0,0],"sentiment":"POS"}]})");
  CHECK(s.tokens == std::vector<std::string>{"Great", "food"});
  REQUIRE(s.triplets.size() == 1);
  CHECK(s.triplets[0] == Triplet{{1, 1}, {0, 0}, Sentiment::kPositive});
  CHECK_FALSE(s.heads.has_value());

  CHECK(parse_record(R"({"tokens":["a","b"]})").triplets.empty());
  CHECK(parse_record(R"({"tokens":["a","b"],"heads":[-1,0]})").heads == std::vector<int>{-1, 0});
}

TEST_CASE("parse_record rejects bad records with their line") {
  const char* bad[] = {
      R"({"tokens":["a","b"],"triplets":[{"aspect":[1,0],"opinion":[0,0],"sentiment":"POS"}]})",
      R"({"tokens":["a","b"],"triplets":[{"aspect":[0,0],"opinion":[2,2],"sentiment":"POS"}]})",
      R"({"tokens":["a","b"],"triplets":[{"aspect":[0,0],"opinion":[1,1],"sentiment":"GOOD"}]})",
      R"({"tokens":["a","b"],"extra":1})",
      R"({"tokens":["a","b"],"triplets":[{"aspect":[0,0],"opinion":[1,1],"sentiment":"POS","x":0}]})",
      R"({"tokens":["a","b"],"heads":[-1]})",
      R"({"tokens":["a","b"],"heads":[0,0]})",
      R"({"triplets":[]})",
      R"({"tokens":["a")",
      R"([1,2])",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    try {
      parse_record(text, 7);
      FAIL("accepted");
    } catch (const ParseError& e) {
      CHECK(e.line == 7);
      CHECK(std::string(e.what()).rfind("line 7: ", 0) == 0);
    }
  }
}

TEST_CASE("serialize round-trips with a stable field order") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    Sentence s = random_annotated_sentence(rng);
    s.tokens[0] = "quote\"and\\slash";
    if (k % 3 == 0) s.heads.reset();
    const std::string text = serialize(s);
    CHECK(parse_record(text) == s);
    CHECK(serialize(parse_record(text)) == text);
    CHECK(text.rfind(R"({"tokens":)", 0) == 0);
  }
  CHECK(serialize(make(1)) == R"({"tokens":["t0"],"triplets":[]})");
}

TEST_CASE("reading a file reports the failing line") {
  std::istringstream in(R"({"tokens":["a"]})"
                        "\n\n"
                        R"({"tokens":["a"],"triplets":[{"aspect":[0,0],"opinion":[0,3],"sentiment":"NEG"}]})"
                        "\n");
  try {
    read_records(in);
    FAIL("accepted");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("triple format conversion") {
  const Sentence s = convert_triple_line("The battery life is great .####[([1, 2], [4], 'POS'), ([1,2],[3],'NEU')]");
  CHECK(s.tokens.size() == 6);
  CHECK(s.triplets == std::vector<Triplet>{{{1, 2}, {4, 4}, Sentiment::kPositive}, {{1, 2}, {3, 3}, Sentiment::kNeutral}});

  std::istringstream in("good food####[([1], [0], 'POS')]\n"
                        "no separator here\n"
                        "bad idx####[([0, 2], [1], 'POS')]\n"
                        "out of range####[([7], [1], 'NEG')]\n"
                        "odd label####[([0], [1], 'GOOD')]\n");
  const ConversionResult r = convert_triple_lines(in);
  CHECK(r.sentences.size() == 1);
  REQUIRE(r.errors.size() == 4);
  CHECK(r.errors[0].rfind("line 2: ", 0) == 0);
  CHECK(r.errors[3].rfind("line 5: ", 0) == 0);
}

TEST_CASE("preprocess examples and per-rule counts") {
  const std::vector<Sentence> raw{
      make(3, {pos(0, 0, 1, 1)}),                                 // short
      make(130, {pos(0, 0, 1, 1)}),                               // long
      make(12, {{{0, 8}, {10, 10}, Sentiment::kNegative}, pos(9, 9, 11, 11)}),  // drops the 9-token aspect
      make(20, {pos(0, 0, 1, 16)}),                               // 16-token opinion is allowed
      make(20, {pos(0, 0, 2, 18)}),                               // 17-token opinion, emptied
      make(6),                                                    // no annotation
      make(4, {pos(0, 0, 3, 3)}),
      make(128, {pos(0, 7, 8, 8)}),
  };
  const PreprocessResult r = preprocess(raw);
  CHECK(r.report.input == 8);
  CHECK(r.report.too_short == 1);
  CHECK(r.report.too_long == 1);
  CHECK(r.report.no_annotation == 1);
  CHECK(r.report.long_aspect == 1);
  CHECK(r.report.long_opinion == 1);
  CHECK(r.report.emptied == 1);
  CHECK(r.report.kept == 4);
  REQUIRE(r.sentences.size() == 4);
  CHECK(r.sentences[0].triplets == std::vector<Triplet>{pos(9, 9, 11, 11)});
  CHECK(r.sentences[1] == raw[3]);
  CHECK(r.sentences[2] == raw[6]);
  CHECK(r.sentences[3] == raw[7]);

  const PreprocessResult again = preprocess(r.sentences);
  CHECK(again.sentences == r.sentences);
  CHECK(again.report.kept == again.report.input);
}

TEST_CASE("chunking cuts after sentence-final punctuation") {
  Sentence review;
  review.tokens = {"good", "food", ".", "rude", "staff", "!", "ok"};
  review.heads = std::vector<int>{1, -1, 1, 4, 1, 4, -1};
  review.triplets = {pos(1, 1, 0, 0), {{4, 4}, {3, 3}, Sentiment::kNegative}, {{1, 1}, {6, 6}, Sentiment::kNeutral}};
  const auto pieces = chunk(review, 4);
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].tokens == std::vector<std::string>{"good", "food", "."});
  CHECK(pieces[0].triplets == std::vector<Triplet>{pos(1, 1, 0, 0)});
  CHECK(pieces[1].tokens == std::vector<std::string>{"rude", "staff", "!", "ok"});
  CHECK(pieces[1].triplets == std::vector<Triplet>{{{1, 1}, {0, 0}, Sentiment::kNegative}});
  CHECK(pieces[1].heads == std::vector<int>{1, -1, 1, -1});
  for (const auto& p : pieces) p.validate();

  CHECK(chunk(review, 128).size() == 1);
  const auto hard = chunk(make(10), 4);
  CHECK(hard.size() == 3);
  CHECK(hard[2].size() == 2);
}

TEST_CASE("split ratios and determinism") {
  std::vector<Sentence> pool;
  for (std::size_t i = 0; i < 1000; ++i) pool.push_back(make(1 + i % 7, {}));
  for (std::size_t i = 0; i < 1000; ++i) pool[i].tokens[0] = "id" + std::to_string(i);
  const Corpus c = split(pool, 3);
  CHECK(c.train.size() == 700);
  CHECK(c.dev.size() == 100);
  CHECK(c.test.size() == 200);
  CHECK(split(pool, 3).train == c.train);
  CHECK(split(pool, 4).train != c.train);

  std::vector<std::string> seen;
  for (const auto* part : {&c.train, &c.dev, &c.test})
    for (const Sentence& s : *part) seen.push_back(s.tokens[0]);
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.size() == 1000);

  const Corpus small = split(std::vector<Sentence>(pool.begin(), pool.begin() + 10), 0);
  CHECK(small.train.size() == 7);
  CHECK(small.dev.size() == 1);
  CHECK(small.test.size() == 2);
  CHECK_THROWS_AS(split(std::vector<Sentence>(pool.begin(), pool.begin() + 9), 0), ValidationError);

  const std::size_t ratios[] = {7, 1, 2};
  CHECK(largest_remainder(13, ratios) == std::vector<std::size_t>{9, 1, 3});
  CHECK(largest_remainder(11, ratios) == std::vector<std::size_t>{8, 1, 2});
}

TEST_CASE("vocabulary") {
  Sentence a;
  a.tokens = {"b", "a", "c", "b"};
  Sentence b;
  b.tokens = {"c", "d"};
  const std::vector<Sentence> train{a, b};
  const Vocabulary v = Vocabulary::build(train);
  CHECK(v.size() == 8);
  CHECK(v.tokens() == std::vector<std::string>{"[PAD]", "[UNK]", "[START]", "[END]", "b", "c", "a", "d"});
  CHECK(v.id("zzz") == 1);
  CHECK(Vocabulary::build(train, 2).size() == 6);
  const std::vector<Sentence> two{make(2)};
  CHECK(Vocabulary::build(two).size() == 6);

  const auto path = std::filesystem::temp_directory_path() / "mug_vocab_test.txt";
  v.save(path);
  const Vocabulary back = Vocabulary::load(path);
  CHECK(back.tokens() == v.tokens());
  std::filesystem::remove(path);
}

TEST_CASE("corpus statistics") {
  const std::vector<Sentence> two{make(4, {pos(0, 0, 1, 1)}), make(6, {pos(0, 0, 1, 1), pos(2, 2, 3, 3), pos(4, 4, 5, 5)})};
  const SplitStats s = stats(two);
  CHECK(s.sentences == 2);
  CHECK(s.triplets == 4);
  CHECK(s.triplets_per_sentence == 2.0);
  CHECK(s.tokens_per_sentence == 5.0);

  const SplitStats empty = stats({});
  CHECK(empty.sentences == 0);
  CHECK(empty.triplets_per_sentence == 0.0);

  // Train row shape of the largest benchmark split: 19485 sentences, 38050 triplets.
  std::vector<Sentence> big(19485, make(4));
  for (std::size_t i = 0; i < 38050; ++i) big[i % 19485].triplets.push_back(pos(0, 0, 1, 1));
  CHECK(std::round(stats(big).triplets_per_sentence * 100) / 100 == 1.95);
}

TEST_CASE("synthetic corpora are valid and seeded") {
  for (const auto& corpus : {lexical_corpus(100, 1), proximity_corpus(100, 1)}) {
    CHECK(corpus.size() == 100);
    for (const Sentence& s : corpus) {
      s.validate();
      CHECK(!s.triplets.empty());
      CHECK(parser::build_gold(s.size(), s.triplets).warnings.empty());
    }
  }
  CHECK(lexical_corpus(20, 4) == lexical_corpus(20, 4));
  CHECK(proximity_corpus(20, 4) != proximity_corpus(20, 5));
  for (const Sentence& s : proximity_corpus(50, 2)) {
    REQUIRE(s.triplets.size() == 2);
    for (const Triplet& t : s.triplets) {
      const auto gap = t.aspect.start > t.opinion.start ? t.aspect.start - t.opinion.start : t.opinion.start - t.aspect.start;
      CHECK(gap == 1);
    }
    REQUIRE(s.heads.has_value());
    CHECK(std::count(s.heads->begin(), s.heads->end(), -1) == 1);
  }
}
