#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mug/types.h"

namespace mug::data {

struct Sentence {
  std::vector<std::string> tokens;
  // Head index per token, −1 for the root.
  std::optional<std::vector<int>> heads;
  std::vector<Triplet> triplets;

  std::size_t size() const { return tokens.size(); }
  // Throws ValidationError on out-of-range spans or heads.
  void validate() const;
  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
};

// One record per line: {"tokens":[...],"heads":[...],"triplets":[{"aspect":[a0,a1],"opinion":[o0,o1],"sentiment":"POS"}]}.
// `heads` and `triplets` are optional; any other field is rejected. Errors are ParseError for `line`.
Sentence parse_record(std::string_view text, std::size_t line = 1);
std::string serialize(const Sentence& sentence);

std::vector<Sentence> read_records(std::istream& in);
std::vector<Sentence> read_corpus_file(const std::filesystem::path& path);
void write_records(std::ostream& out, std::span<const Sentence> sentences);
void write_corpus_file(const std::filesystem::path& path, std::span<const Sentence> sentences);

// Community triple format: `tok tok tok####[([a...], [o...], 'POS'), ...]`.
Sentence convert_triple_line(std::string_view text, std::size_t line = 1);

struct ConversionResult {
  std::vector<Sentence> sentences;
  // "line N: reason" for every rejected line.
  std::vector<std::string> errors;
};
ConversionResult convert_triple_lines(std::istream& in);

struct PreprocessRules {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 128;
  std::size_t max_aspect = 8;
  std::size_t max_opinion = 16;
};

struct PreprocessReport {
  std::size_t input = 0;
  std::size_t no_annotation = 0;
  std::size_t too_short = 0;
  std::size_t too_long = 0;
  std::size_t long_aspect = 0;   // triplets
  std::size_t long_opinion = 0;  // triplets
  std::size_t emptied = 0;       // sentences left without triplets by the span rules
  std::size_t kept = 0;
};

struct PreprocessResult {
  std::vector<Sentence> sentences;
  PreprocessReport report;
};

// Sentence rules are checked in the order annotation-less, short, long; each sentence counts once.
// A triplet failing both span rules counts under long_aspect.
PreprocessResult preprocess(std::span<const Sentence> raw, const PreprocessRules& rules = {});

// Pieces of at most `max_tokens`, cut after sentence-final punctuation where possible. Triplets
// crossing a cut are dropped; heads pointing outside a piece become roots.
std::vector<Sentence> chunk(const Sentence& review, std::size_t max_tokens = 128);

// Seeded shuffle, then contiguous 7:1:2 cut with largest-remainder rounding.
Corpus split(std::vector<Sentence> sentences, std::uint64_t seed, std::string name = "corpus");
// Counts per part for `total` items under integer `ratios`.
std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> ratios);

class Vocabulary {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kStart = "[START]";
  static constexpr std::string_view kEnd = "[END]";

  Vocabulary();
  // Content ids ordered by descending frequency, then lexicographically.
  static Vocabulary build(std::span<const Sentence> train, std::size_t min_count = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<TokenId> encode(std::span<const std::string> tokens) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct SplitStats {
  std::size_t sentences = 0;
  std::size_t triplets = 0;
  double triplets_per_sentence = 0.0;
  double tokens_per_sentence = 0.0;
};

SplitStats stats(std::span<const Sentence> sentences);

}  // namespace mug::data
