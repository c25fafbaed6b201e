#include "mug/data/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mug/errors.h"

namespace mug::data {

using json = nlohmann::ordered_json;

namespace {

std::string span_text(const Span& s) { return "[" + std::to_string(s.start) + "," + std::to_string(s.end) + "]"; }

Span parse_span(const json& value, const char* field, std::size_t line) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() || !value[1].is_number_integer()) {
    throw ParseError(line, std::string(field) + " must be a pair of integers");
  }
  const auto a = value[0].get<long long>(), b = value[1].get<long long>();
  if (a < 0 || b < 0) throw ParseError(line, std::string(field) + " has a negative index");
  if (b < a) throw ParseError(line, std::string(field) + " ends before it starts");
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

bool is_sentence_final(const std::string& token) {
  static const char* const kFinal[] = {".", "!", "?", "...", "\xE3\x80\x82", "\xEF\xBC\x81", "\xEF\xBC\x9F",
                                       "\xE2\x80\xA6"};
  return std::any_of(std::begin(kFinal), std::end(kFinal), [&](const char* p) { return token == p; });
}

// Tokens [begin, end) of `review` as a new sentence.
Sentence slice(const Sentence& review, std::size_t begin, std::size_t end) {
  Sentence piece;
  piece.tokens.assign(review.tokens.begin() + begin, review.tokens.begin() + end);
  if (review.heads) {
    std::vector<int> heads;
    for (std::size_t i = begin; i < end; ++i) {
      const int h = (*review.heads)[i];
      const bool inside = h >= static_cast<int>(begin) && h < static_cast<int>(end);
      heads.push_back(inside ? h - static_cast<int>(begin) : -1);
    }
    piece.heads = std::move(heads);
  }
  auto inside = [&](const Span& s) { return s.start >= begin && s.end < end; };
  for (const Triplet& t : review.triplets) {
    if (!inside(t.aspect) || !inside(t.opinion)) continue;
    piece.triplets.push_back({{t.aspect.start - begin, t.aspect.end - begin},
                              {t.opinion.start - begin, t.opinion.end - begin},
                              t.sentiment});
  }
  return piece;
}

}  // namespace

void Sentence::validate() const {
  const std::size_t n = tokens.size();
  if (n == 0) throw ValidationError("sentence has no tokens");
  if (heads) {
    if (heads->size() != n) throw ValidationError("heads length differs from token count");
    for (std::size_t i = 0; i < n; ++i) {
      const int h = (*heads)[i];
      if (h < -1 || h >= static_cast<int>(n) || h == static_cast<int>(i)) {
        throw ValidationError("head " + std::to_string(h) + " of token " + std::to_string(i) + " is invalid");
      }
    }
  }
  for (const Triplet& t : triplets) {
    for (const Span& s : {t.aspect, t.opinion}) {
      if (s.start > s.end || s.end >= n) throw ValidationError("span " + span_text(s) + " outside the sentence");
    }
  }
}

Sentence parse_record(std::string_view text, std::size_t line) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("malformed record: ") + e.what());
  }
  if (!record.is_object()) throw ParseError(line, "record is not an object");
  for (const auto& [key, value] : record.items()) {
    if (key != "tokens" && key != "heads" && key != "triplets") throw ParseError(line, "unknown field '" + key + "'");
  }
  Sentence s;
  if (!record.contains("tokens") || !record["tokens"].is_array()) throw ParseError(line, "missing token list");
  for (const json& t : record["tokens"]) {
    if (!t.is_string()) throw ParseError(line, "tokens must be strings");
    s.tokens.push_back(t.get<std::string>());
  }
  if (record.contains("heads")) {
    const json& heads = record["heads"];
    if (!heads.is_array()) throw ParseError(line, "heads must be a list");
    std::vector<int> values;
    for (const json& h : heads) {
      if (!h.is_number_integer()) throw ParseError(line, "heads must be integers");
      values.push_back(h.get<int>());
    }
    s.heads = std::move(values);
  }
  if (record.contains("triplets")) {
    const json& triplets = record["triplets"];
    if (!triplets.is_array()) throw ParseError(line, "triplets must be a list");
    for (const json& t : triplets) {
      if (!t.is_object()) throw ParseError(line, "triplet is not an object");
      for (const auto& [key, value] : t.items()) {
        if (key != "aspect" && key != "opinion" && key != "sentiment") {
          throw ParseError(line, "unknown triplet field '" + key + "'");
        }
      }
      if (!t.contains("aspect") || !t.contains("opinion") || !t.contains("sentiment")) {
        throw ParseError(line, "triplet needs aspect, opinion and sentiment");
      }
      const auto sentiment = t["sentiment"].is_string() ? parse_sentiment(t["sentiment"].get<std::string>())
                                                        : std::nullopt;
      if (!sentiment) throw ParseError(line, "sentiment must be POS, NEG or NEU");
      s.triplets.push_back({parse_span(t["aspect"], "aspect", line), parse_span(t["opinion"], "opinion", line),
                            *sentiment});
    }
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
  return s;
}

std::string serialize(const Sentence& sentence) {
  json record;
  record["tokens"] = sentence.tokens;
  if (sentence.heads) record["heads"] = *sentence.heads;
  json triplets = json::array();
  for (const Triplet& t : sentence.triplets) {
    json item;
    item["aspect"] = {t.aspect.start, t.aspect.end};
    item["opinion"] = {t.opinion.start, t.opinion.end};
    item["sentiment"] = std::string(to_string(t.sentiment));
    triplets.push_back(std::move(item));
  }
  record["triplets"] = std::move(triplets);
  return record.dump();
}

std::vector<Sentence> read_records(std::istream& in) {
  std::vector<Sentence> out;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(text, line));
  }
  return out;
}

std::vector<Sentence> read_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return read_records(in);
  } catch (const ParseError& e) {
    ParseError located(0, path.string() + ": " + e.what());
    located.line = e.line;
    throw located;
  }
}

void write_records(std::ostream& out, std::span<const Sentence> sentences) {
  for (const Sentence& s : sentences) out << serialize(s) << '\n';
}

void write_corpus_file(const std::filesystem::path& path, std::span<const Sentence> sentences) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_records(out, sentences);
}

Sentence convert_triple_line(std::string_view text, std::size_t line) {
  const auto sep = text.find("####");
  if (sep == std::string_view::npos) throw ParseError(line, "missing '####' separator");
  Sentence s;
  std::istringstream words{std::string(text.substr(0, sep))};
  for (std::string w; words >> w;) s.tokens.push_back(w);

  // The annotation is a Python literal; quotes and tuples map onto JSON directly.
  std::string literal(text.substr(sep + 4));
  for (char& c : literal) {
    if (c == '\'') c = '"';
    if (c == '(') c = '[';
    if (c == ')') c = ']';
  }
  json triples;
  try {
    triples = json::parse(literal);
  } catch (const json::parse_error&) {
    throw ParseError(line, "malformed triple list");
  }
  if (!triples.is_array()) throw ParseError(line, "triple list is not a list");
  auto to_span = [&](const json& indices, const char* role) {
    if (!indices.is_array() || indices.empty()) throw ParseError(line, std::string(role) + " indices must be a nonempty list");
    std::vector<long long> v;
    for (const json& i : indices) {
      if (!i.is_number_integer() || i.get<long long>() < 0) throw ParseError(line, std::string(role) + " index is invalid");
      v.push_back(i.get<long long>());
    }
    std::sort(v.begin(), v.end());
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (v[k] != v[k - 1] + 1) throw ParseError(line, std::string(role) + " indices are not contiguous");
    }
    return Span{static_cast<std::size_t>(v.front()), static_cast<std::size_t>(v.back())};
  };
  for (const json& t : triples) {
    if (!t.is_array() || t.size() != 3 || !t[2].is_string()) throw ParseError(line, "triple must be (aspect, opinion, label)");
    const auto sentiment = parse_sentiment(t[2].get<std::string>());
    if (!sentiment) throw ParseError(line, "unknown sentiment '" + t[2].get<std::string>() + "'");
    s.triplets.push_back({to_span(t[0], "aspect"), to_span(t[1], "opinion"), *sentiment});
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
  return s;
}

ConversionResult convert_triple_lines(std::istream& in) {
  ConversionResult result;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.sentences.push_back(convert_triple_line(text, line));
    } catch (const ParseError& e) {
      result.errors.push_back(e.what());
    }
  }
  return result;
}

PreprocessResult preprocess(std::span<const Sentence> raw, const PreprocessRules& rules) {
  PreprocessResult result;
  PreprocessReport& r = result.report;
  r.input = raw.size();
  for (const Sentence& s : raw) {
    if (s.triplets.empty()) {
      ++r.no_annotation;
      continue;
    }
    if (s.size() < rules.min_tokens) {
      ++r.too_short;
      continue;
    }
    if (s.size() > rules.max_tokens) {
      ++r.too_long;
      continue;
    }
    Sentence kept = s;
    kept.triplets.clear();
    for (const Triplet& t : s.triplets) {
      if (t.aspect.length() > rules.max_aspect) {
        ++r.long_aspect;
      } else if (t.opinion.length() > rules.max_opinion) {
        ++r.long_opinion;
      } else {
        kept.triplets.push_back(t);
      }
    }
    if (kept.triplets.empty()) {
      ++r.emptied;
      continue;
    }
    result.sentences.push_back(std::move(kept));
  }
  r.kept = result.sentences.size();
  return result;
}

std::vector<Sentence> chunk(const Sentence& review, std::size_t max_tokens) {
  if (max_tokens == 0) throw ValidationError("chunk: max_tokens must be positive");
  const std::size_t n = review.size();
  // Segment ends (exclusive) after each sentence-final token and at the end of the review.
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_sentence_final(review.tokens[i]) || i + 1 == n) ends.push_back(i + 1);
  }
  std::vector<Sentence> pieces;
  std::size_t begin = 0, cut = 0;
  for (std::size_t e : ends) {
    if (e - begin <= max_tokens) {
      cut = e;
      continue;
    }
    if (cut > begin) {
      pieces.push_back(slice(review, begin, cut));
      begin = cut;
    }
    // A single segment longer than the limit is cut at fixed width.
    while (e - begin > max_tokens) {
      pieces.push_back(slice(review, begin, begin + max_tokens));
      begin += max_tokens;
    }
    cut = e;
  }
  if (cut > begin) pieces.push_back(slice(review, begin, cut));
  return pieces;
}

std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> ratios) {
  std::size_t denom = 0;
  for (std::size_t r : ratios) denom += r;
  if (denom == 0) throw ValidationError("largest_remainder: ratios sum to zero");
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, part)
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < ratios.size(); ++p) {
    counts[p] = total * ratios[p] / denom;
    assigned += counts[p];
    remainders.emplace_back(total * ratios[p] % denom, p);
  }
  // Larger remainder first; earlier part on ties.
  std::stable_sort(remainders.begin(), remainders.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

Corpus split(std::vector<Sentence> sentences, std::uint64_t seed, std::string name) {
  if (sentences.size() < 10) {
    throw ValidationError("split: need at least 10 examples, got " + std::to_string(sentences.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(sentences.begin(), sentences.end(), rng);
  const std::size_t ratios[] = {7, 1, 2};
  const auto counts = largest_remainder(sentences.size(), ratios);
  Corpus c;
  c.name = std::move(name);
  auto first = std::make_move_iterator(sentences.begin());
  c.train.assign(first, first + counts[0]);
  c.dev.assign(first + counts[0], first + counts[0] + counts[1]);
  c.test.assign(first + counts[0] + counts[1], std::make_move_iterator(sentences.end()));
  return c;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : {kPad, kUnk, kStart, kEnd}) push(std::string(t));
}

void Vocabulary::push(std::string token) {
  if (ids_.count(token)) throw ValidationError("vocabulary: duplicate token '" + token + "'");
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const Sentence> train, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const Sentence& s : train)
    for (const std::string& t : s.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [token, count] : ordered) {
    if (count >= min_count && !v.ids_.count(token)) v.push(token);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const std::string_view reserved[] = {kPad, kUnk, kStart, kEnd};
  if (tokens.size() < 4 || !std::equal(std::begin(reserved), std::end(reserved), tokens.begin())) {
    throw ValidationError("vocabulary: reserved tokens missing");
  }
  Vocabulary v;
  for (std::size_t i = 4; i < tokens.size(); ++i) v.push(std::move(tokens[i]));
  return v;
}

TokenId Vocabulary::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? 1 : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

SplitStats stats(std::span<const Sentence> sentences) {
  SplitStats s;
  std::size_t tokens = 0;
  for (const Sentence& x : sentences) {
    ++s.sentences;
    s.triplets += x.triplets.size();
    tokens += x.size();
  }
  if (s.sentences > 0) {
    s.triplets_per_sentence = static_cast<double>(s.triplets) / static_cast<double>(s.sentences);
    s.tokens_per_sentence = static_cast<double>(tokens) / static_cast<double>(s.sentences);
  }
  return s;
}

}  // namespace mug::data
