#include "mug/cli/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mug/data/synthetic.h"
#include "mug/errors.h"
#include "mug/evaluation/evaluation.h"

namespace mug::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

enum class Kind { kCount, kInteger, kReal, kBool, kText };

struct Field {
  const char* key;
  Kind kind;
  const char* help;
};

// Order here is the order of config.resolved.
constexpr Field kFields[] = {
    {"dim", Kind::kCount, "encoder width D"},
    {"heads", Kind::kCount, "attention heads H"},
    {"layers", Kind::kCount, "encoder layers L"},
    {"ffn_dim", Kind::kCount, "feed-forward width F"},
    {"max_length", Kind::kCount, "position table size, including the two markers"},
    {"tag_hidden", Kind::kCount, "tagger hidden width (0 = D)"},
    {"relation_hidden", Kind::kCount, "biaffine hidden width (0 = D)"},
    {"adapter", Kind::kText, "structure adapter: none, rel or dep"},
    {"tau", Kind::kInteger, "distance clip threshold"},
    {"lr", Kind::kReal, "base learning rate"},
    {"parser_lr_multiplier", Kind::kReal, "parser learning-rate multiplier"},
    {"batch_size", Kind::kCount, "sentences per batch (0 = 8 bare, 6 adapted)"},
    {"max_epochs", Kind::kCount, "epoch budget"},
    {"patience", Kind::kCount, "epochs without dev improvement before stopping"},
    {"warmup_epochs", Kind::kReal, "linear warmup length in epochs"},
    {"clip_norm", Kind::kReal, "global gradient-norm clip"},
    {"weight_decay", Kind::kReal, "decoupled weight decay on matrices"},
    {"seed", Kind::kCount, "seed for initialization and batching"},
    {"freeze_adapter", Kind::kBool, "keep relation tables at their initial values"},
    {"threads", Kind::kCount, "worker threads (default from MUG_THREADS)"},
    {"min_count", Kind::kCount, "vocabulary frequency cutoff"},
    {"train", Kind::kText, "training corpus"},
    {"dev", Kind::kText, "development corpus"},
    {"output", Kind::kText, "output directory"},
};

const Field* find_field(const std::string& key) {
  for (const Field& f : kFields)
    if (key == f.key) return &f;
  return nullptr;
}

void check_type(const Field& f, const Json& v) {
  bool ok = false;
  const char* expected = "";
  switch (f.kind) {
    case Kind::kCount:
      ok = v.is_number_unsigned();
      expected = "a non-negative integer";
      break;
    case Kind::kInteger:
      ok = v.is_number_integer();
      expected = "an integer";
      break;
    case Kind::kReal:
      ok = v.is_number();
      expected = "a number";
      break;
    case Kind::kBool:
      ok = v.is_boolean();
      expected = "true or false";
      break;
    case Kind::kText:
      ok = v.is_string();
      expected = "a string";
      break;
  }
  if (!ok) throw ValidationError(std::string("config key '") + f.key + "' must be " + expected + ", got " + v.dump());
}

Json encode(const RunConfig& c) {
  return Json{{"dim", c.dim},
              {"heads", c.heads},
              {"layers", c.layers},
              {"ffn_dim", c.ffn_dim},
              {"max_length", c.max_length},
              {"tag_hidden", c.tag_hidden},
              {"relation_hidden", c.relation_hidden},
              {"adapter", c.adapter},
              {"tau", c.tau},
              {"lr", c.lr},
              {"parser_lr_multiplier", c.parser_lr_multiplier},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"warmup_epochs", c.warmup_epochs},
              {"clip_norm", c.clip_norm},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed},
              {"freeze_adapter", c.freeze_adapter},
              {"threads", c.threads},
              {"min_count", c.min_count},
              {"train", c.train},
              {"dev", c.dev},
              {"output", c.output}};
}

// `j` has every key, already type-checked.
RunConfig decode(const Json& j) {
  RunConfig c;
  c.dim = j["dim"].get<std::size_t>();
  c.heads = j["heads"].get<std::size_t>();
  c.layers = j["layers"].get<std::size_t>();
  c.ffn_dim = j["ffn_dim"].get<std::size_t>();
  c.max_length = j["max_length"].get<std::size_t>();
  c.tag_hidden = j["tag_hidden"].get<std::size_t>();
  c.relation_hidden = j["relation_hidden"].get<std::size_t>();
  c.adapter = j["adapter"].get<std::string>();
  const auto tau = j["tau"].get<std::int64_t>();
  if (tau < -1000 || tau > 1000) throw ValidationError("tau out of range: " + std::to_string(tau));
  c.tau = static_cast<int>(tau);
  c.lr = j["lr"].get<double>();
  c.parser_lr_multiplier = j["parser_lr_multiplier"].get<double>();
  c.batch_size = j["batch_size"].get<std::size_t>();
  c.max_epochs = j["max_epochs"].get<std::size_t>();
  c.patience = j["patience"].get<std::size_t>();
  c.warmup_epochs = j["warmup_epochs"].get<double>();
  c.clip_norm = j["clip_norm"].get<double>();
  c.weight_decay = j["weight_decay"].get<double>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.freeze_adapter = j["freeze_adapter"].get<bool>();
  c.threads = j["threads"].get<std::size_t>();
  c.min_count = j["min_count"].get<std::size_t>();
  c.train = j["train"].get<std::string>();
  c.dev = j["dev"].get<std::string>();
  c.output = j["output"].get<std::string>();
  return c;
}

void merge_object(Json& into, const Json& from, const std::string& origin) {
  if (!from.is_object()) throw ValidationError(origin + ": expected one flat JSON object");
  for (const auto& [key, value] : from.items()) {
    const Field* f = find_field(key);
    if (!f) throw ValidationError(origin + ": unknown config key '" + key + "'");
    check_type(*f, value);
    into[key] = value;
  }
}

Json override_value(const Field& f, const std::string& text) {
  switch (f.kind) {
    case Kind::kText:
      return text;
    case Kind::kBool:
      if (text == "true") return true;
      if (text == "false") return false;
      throw ValidationError(std::string("--") + f.key + " expects true or false, got '" + text + "'");
    default:
      break;
  }
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) throw ValidationError(std::string("--") + f.key + ": not a number: '" + text + "'");
  check_type(f, v);
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed2(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, r.ptr);
}

// Refuses to write over an input corpus.
void ensure_distinct(const fs::path& input, const fs::path& output) {
  std::error_code ec;
  if (fs::exists(output, ec) && fs::equivalent(input, output, ec)) {
    throw ValidationError("refusing to overwrite input " + input.string());
  }
}

std::string scores_header() { return "split\tmatched\tpredicted\tgold\tP\tR\tF1\n"; }

std::string scores_row(const std::string& name, const evaluation::MatchScores& s) {
  return name + '\t' + std::to_string(s.matched) + '\t' + std::to_string(s.predicted) + '\t' + std::to_string(s.gold) +
         '\t' + shortest(s.precision()) + '\t' + shortest(s.recall()) + '\t' + shortest(s.f1()) + '\n';
}

struct TrainedModel {
  RunConfig config;
  data::Vocabulary vocab;
  training::MugModel model;
};

TrainedModel load_trained(const fs::path& dir) {
  RunConfig config = from_json(read_text(dir / "config.resolved"));
  data::Vocabulary vocab = data::Vocabulary::load(dir / "vocab.txt");
  training::MugModel model(config.model(vocab.size()), config.seed);
  model.load(dir / "weights.bin");
  return {std::move(config), std::move(vocab), std::move(model)};
}

// --- subcommands -------------------------------------------------------------------------

int do_train(const RunConfig& c, bool quiet, std::ostream& out, std::ostream& err) {
  if (c.train.empty() || c.dev.empty() || c.output.empty()) {
    throw ValidationError("train needs train, dev and output (flags or config file)");
  }
  const auto train_sentences = data::read_corpus_file(c.train);
  const auto dev_sentences = data::read_corpus_file(c.dev);
  if (train_sentences.empty()) throw ValidationError(c.train + ": no sentences");
  const data::Vocabulary vocab = data::Vocabulary::build(train_sentences, c.min_count);
  const training::ModelConfig mc = c.model(vocab.size());
  const auto train_set = training::make_examples(train_sentences, vocab, c.structure());
  const auto dev_set = training::make_examples(dev_sentences, vocab, c.structure());

  const fs::path dir(c.output);
  fs::create_directories(dir);
  write_text(dir / "config.resolved", to_json(c));
  vocab.save(dir / "vocab.txt");

  training::MugModel model(mc, c.seed);
  const auto history = training::train(model, train_set, dev_set, c.training(), [&](const training::EpochRecord& r) {
    if (!quiet) {
      err << "epoch " << r.epoch << "  L_t " << shortest(r.tagging) << "  L_p " << shortest(r.parsing) << "  dev F1 "
          << shortest(r.dev.f1()) << '\n';
    }
  });

  std::ostringstream tsv;
  history.write_tsv(tsv);
  write_text(dir / "history.tsv", tsv.str());
  model.save(dir / "weights.bin");
  write_text(dir / "scores.tsv", scores_header() + scores_row("dev", training::evaluate(model, dev_set)));
  out << "best epoch " << history.best_epoch << " of " << history.epochs.size() << ", dev F1 "
      << shortest(history.best_dev_f1) << (history.stopped_early ? " (stopped early)" : "") << '\n';
  return 0;
}

int do_eval(const fs::path& model_dir, const std::vector<std::string>& inputs, const std::string& output,
            std::ostream& out) {
  TrainedModel m = load_trained(model_dir);
  std::string table = scores_header();
  for (const std::string& input : inputs) {
    const auto examples = training::make_examples(data::read_corpus_file(input), m.vocab, m.config.structure());
    table += scores_row(fs::path(input).stem().string(), training::evaluate(m.model, examples));
  }
  const fs::path dir = output.empty() ? model_dir : fs::path(output);
  fs::create_directories(dir);
  write_text(dir / "scores.tsv", table);
  out << table;
  return 0;
}

int do_decode(const fs::path& model_dir, const fs::path& input, const fs::path& output, std::ostream& out) {
  ensure_distinct(input, output);
  TrainedModel m = load_trained(model_dir);
  auto sentences = data::read_corpus_file(input);
  const auto examples = training::make_examples(sentences, m.vocab, m.config.structure());
  const auto predicted = training::predict_all(m.model, examples);
  std::size_t count = 0;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    sentences[k].triplets = predicted[k];
    count += predicted[k].size();
  }
  data::write_corpus_file(output, sentences);
  out << "decoded " << sentences.size() << " sentences, " << count << " triplets\n";
  return 0;
}

int do_preprocess(const fs::path& input, const fs::path& output, bool chunk_reviews, const data::PreprocessRules& rules,
                  std::ostream& out) {
  ensure_distinct(input, output);
  const auto raw = data::read_corpus_file(input);
  std::vector<data::Sentence> pieces;
  if (chunk_reviews) {
    for (const auto& review : raw) {
      auto parts = data::chunk(review, rules.max_tokens);
      pieces.insert(pieces.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
    }
  } else {
    pieces = raw;
  }
  const auto result = data::preprocess(pieces, rules);
  data::write_corpus_file(output, result.sentences);
  const auto& r = result.report;
  out << "rule\tcount\n"
      << "input\t" << r.input << '\n'
      << "no_annotation\t" << r.no_annotation << '\n'
      << "too_short\t" << r.too_short << '\n'
      << "too_long\t" << r.too_long << '\n'
      << "long_aspect_triplets\t" << r.long_aspect << '\n'
      << "long_opinion_triplets\t" << r.long_opinion << '\n'
      << "emptied\t" << r.emptied << '\n'
      << "kept\t" << r.kept << '\n';
  return 0;
}

int do_convert(const fs::path& input, const fs::path& output, std::ostream& out, std::ostream& err) {
  ensure_distinct(input, output);
  std::ifstream in(input);
  if (!in) throw ValidationError("cannot open " + input.string());
  const auto result = data::convert_triple_lines(in);
  data::write_corpus_file(output, result.sentences);
  for (const std::string& e : result.errors) err << input.string() << ": " << e << '\n';
  out << "converted " << result.sentences.size() << ", rejected " << result.errors.size() << '\n';
  return result.errors.empty() ? 0 : 1;
}

int do_split(const fs::path& input, const fs::path& output, std::uint64_t seed, std::ostream& out) {
  const data::Corpus corpus = data::split(data::read_corpus_file(input), seed, input.stem().string());
  fs::create_directories(output);
  for (const fs::path& p : {output / "train.jsonl", output / "dev.jsonl", output / "test.jsonl"}) ensure_distinct(input, p);
  data::write_corpus_file(output / "train.jsonl", corpus.train);
  data::write_corpus_file(output / "dev.jsonl", corpus.dev);
  data::write_corpus_file(output / "test.jsonl", corpus.test);
  out << "train\t" << corpus.train.size() << "\ndev\t" << corpus.dev.size() << "\ntest\t" << corpus.test.size() << '\n';
  return 0;
}

int do_stats(const std::vector<std::string>& inputs, std::ostream& out) {
  out << "split\t#S\t#T\t#T/S\t#Tk/S\n";
  for (const std::string& input : inputs) {
    const auto s = data::stats(data::read_corpus_file(input));
    out << fs::path(input).stem().string() << '\t' << s.sentences << '\t' << s.triplets << '\t'
        << fixed2(s.triplets_per_sentence) << '\t' << fixed2(s.tokens_per_sentence) << '\n';
  }
  return 0;
}

struct ParamsOptions {
  std::string variant = "adapter";
  std::size_t layers = 12;
  int tau = structure::kDefaultTau;
  std::size_t head_dim = 64;
  std::size_t dim = 768;
  std::size_t ffn = 3072;
  std::size_t heads = 12;
  std::size_t stacked = 2;
  std::size_t vocab = 30522;
  std::size_t max_length = 512;
};

int do_params(const ParamsOptions& o, std::ostream& out) {
  std::size_t value = 0;
  if (o.variant == "adapter") {
    structure::StructureConfig{o.tau, structure::StructureKind::kRelative}.validate();
    value = encoder::adapter_param_increment(o.layers, o.tau, o.head_dim);
  } else if (o.variant == "layer2") {
    value = encoder::struct_layer_param_increment(o.dim, o.ffn, o.stacked);
  } else {
    encoder::EncoderConfig e;
    e.vocab_size = o.vocab;
    e.dim = o.dim;
    e.heads = o.heads;
    e.layers = o.layers;
    e.ffn_dim = o.ffn;
    e.max_length = o.max_length;
    e.validate();
    value = encoder::encoder_param_count(e) + parser::TripletParser::param_count({o.dim, 0, 0});
  }
  out << group_thousands(value) << '\n';
  return 0;
}

int do_bench(const std::string& method, const evaluation::BenchOptions& options, std::ostream& out) {
  const auto report = evaluation::bench_distance(structure::parse_structure_kind(method), options);
  const Json j{{"method", std::string(structure::to_string(report.method))},
               {"length", report.length},
               {"repetitions", report.repetitions},
               {"tokens", report.tokens},
               {"elapsed_ms", report.elapsed_ms},
               {"tokens_per_ms", report.tokens_per_ms},
               {"threads", 1},
               {"hardware", report.hardware},
               {"note", report.note}};
  out << j.dump(2) << '\n';
  return 0;
}

int do_synth(const std::string& kind, std::size_t size, std::uint64_t seed, const fs::path& output, std::ostream& out) {
  const auto sentences = kind == "lexical" ? data::lexical_corpus(size, seed) : data::proximity_corpus(size, seed);
  data::write_corpus_file(output, sentences);
  out << "wrote " << sentences.size() << " sentences\n";
  return 0;
}

std::string flag_name(const char* key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

}  // namespace

structure::StructureConfig RunConfig::structure() const { return {tau, structure::parse_structure_kind(adapter)}; }

training::ModelConfig RunConfig::model(std::size_t vocab_size) const {
  training::ModelConfig m;
  m.encoder.vocab_size = vocab_size;
  m.encoder.dim = dim;
  m.encoder.heads = heads;
  m.encoder.layers = layers;
  m.encoder.ffn_dim = ffn_dim;
  m.encoder.max_length = max_length;
  m.encoder.adapter = structure();
  m.tag_hidden = tag_hidden;
  m.relation_hidden = relation_hidden;
  return m;
}

training::TrainConfig RunConfig::training() const {
  training::TrainConfig t;
  t.base_lr = lr;
  t.parser_lr_multiplier = parser_lr_multiplier;
  t.batch_size = batch_size;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.warmup_epochs = warmup_epochs;
  t.clip_norm = clip_norm;
  t.weight_decay = weight_decay;
  t.seed = seed;
  t.freeze_adapter = freeze_adapter;
  t.threads = threads;
  return t;
}

void RunConfig::validate() const {
  structure().validate();
  // Placeholder vocabulary with one content id; the real size is only known at train time.
  model(data::Vocabulary().size() + 1).encoder.validate();
  training().validate();
  if (threads == 0) throw ValidationError("threads must be at least 1");
}

std::size_t default_threads() {
  const char* env = std::getenv("MUG_THREADS");
  if (!env || !*env) return 1;
  std::size_t n = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto r = std::from_chars(env, end, n);
  if (r.ec != std::errc() || r.ptr != end || n == 0) {
    throw ValidationError(std::string("MUG_THREADS must be a positive integer, got '") + env + "'");
  }
  return n;
}

RunConfig resolve_config(const std::optional<fs::path>& file, const std::map<std::string, std::string>& overrides) {
  RunConfig defaults;
  defaults.threads = default_threads();
  Json j = encode(defaults);
  if (file) {
    Json loaded = Json::parse(read_text(*file), nullptr, false);
    if (loaded.is_discarded()) throw ValidationError(file->string() + ": not valid JSON");
    merge_object(j, loaded, file->string());
  }
  for (const auto& [key, text] : overrides) {
    const Field* f = find_field(key);
    if (!f) throw ValidationError("unknown option " + key);
    j[key] = override_value(*f, text);
  }
  RunConfig c = decode(j);
  c.validate();
  return c;
}

std::string to_json(const RunConfig& config) { return encode(config).dump(2) + '\n'; }

RunConfig from_json(const std::string& text) {
  Json loaded = Json::parse(text, nullptr, false);
  if (loaded.is_discarded()) throw ValidationError("config: not valid JSON");
  Json j = encode(RunConfig{});
  merge_object(j, loaded, "config");
  RunConfig c = decode(j);
  c.validate();
  return c;
}

std::string group_thousands(std::size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t k = 0; k < digits.size(); ++k) {
    if (k > 0 && (digits.size() - k) % 3 == 0) out += ',';
    out += digits[k];
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-aware aspect sentiment triplet extraction", "mug"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model; writes config.resolved, vocab.txt, history.tsv, weights.bin, scores.tsv");
  std::string config_file;
  std::map<std::string, std::string> overrides;
  bool quiet = false;
  train_cmd->add_option("--config", config_file, "flat JSON config file; flags override it");
  for (const Field& f : kFields) {
    const std::string key = f.key;
    train_cmd->add_option_function<std::string>(flag_name(f.key), [&overrides, key](const std::string& v) { overrides[key] = v; },
                                                f.help);
  }
  train_cmd->add_flag("--quiet", quiet, "no per-epoch progress on stderr");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a trained model on corpora; writes scores.tsv");
  std::string model_dir, eval_output;
  std::vector<std::string> eval_inputs;
  eval_cmd->add_option("--model", model_dir, "directory written by train")->required();
  eval_cmd->add_option("--input", eval_inputs, "gold corpora")->required();
  eval_cmd->add_option("--output", eval_output, "directory for scores.tsv (default: the model directory)");

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "write predicted triplets as canonical records");
  std::string decode_input, decode_output;
  decode_cmd->add_option("--model", model_dir, "directory written by train")->required();
  decode_cmd->add_option("--input", decode_input, "corpus to decode")->required();
  decode_cmd->add_option("--output", decode_output, "predictions file")->required();

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "apply the length and annotation filters");
  std::string pre_input, pre_output;
  bool pre_chunk = false;
  data::PreprocessRules rules;
  pre_cmd->add_option("--input", pre_input, "canonical corpus")->required();
  pre_cmd->add_option("--output", pre_output, "filtered corpus")->required();
  pre_cmd->add_flag("--chunk", pre_chunk, "split reviews at sentence-final punctuation first");
  pre_cmd->add_option("--min-tokens", rules.min_tokens, "drop sentences shorter than this")->capture_default_str();
  pre_cmd->add_option("--max-tokens", rules.max_tokens, "drop sentences longer than this")->capture_default_str();
  pre_cmd->add_option("--max-aspect", rules.max_aspect, "drop triplets with longer aspects")->capture_default_str();
  pre_cmd->add_option("--max-opinion", rules.max_opinion, "drop triplets with longer opinions")->capture_default_str();

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "convert sentence####[triples] lines to canonical records");
  std::string convert_input, convert_output;
  convert_cmd->add_option("--input", convert_input, "triple-format file")->required();
  convert_cmd->add_option("--output", convert_output, "canonical corpus")->required();

  // split
  auto* split_cmd = app.add_subcommand("split", "seeded 7:1:2 train/dev/test split");
  std::string split_input, split_output;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--input", split_input, "canonical corpus")->required();
  split_cmd->add_option("--output", split_output, "directory for train/dev/test.jsonl")->required();
  split_cmd->add_option("--seed", split_seed, "shuffle seed")->capture_default_str();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "per-file sentence and triplet counts");
  std::vector<std::string> stats_inputs;
  stats_cmd->add_option("inputs", stats_inputs, "canonical corpora")->required();

  // params
  auto* params_cmd = app.add_subcommand("params", "parameter accounting for a model variant");
  ParamsOptions po;
  params_cmd->add_option("--variant", po.variant, "adapter: relation tables; layer2: stacked layers; bare: whole model")
      ->check(CLI::IsMember({"bare", "adapter", "layer2"}))
      ->capture_default_str();
  params_cmd->add_option("--layers", po.layers, "encoder layers L")->capture_default_str();
  params_cmd->add_option("--tau", po.tau, "distance clip threshold")->capture_default_str();
  params_cmd->add_option("--head-dim", po.head_dim, "per-head width d")->capture_default_str();
  params_cmd->add_option("--dim", po.dim, "model width D")->capture_default_str();
  params_cmd->add_option("--ffn", po.ffn, "feed-forward width F")->capture_default_str();
  params_cmd->add_option("--heads", po.heads, "attention heads (bare)")->capture_default_str();
  params_cmd->add_option("--stacked", po.stacked, "stacked layers (layer2)")->capture_default_str();
  params_cmd->add_option("--vocab", po.vocab, "vocabulary size (bare)")->capture_default_str();
  params_cmd->add_option("--max-length", po.max_length, "position table size (bare)")->capture_default_str();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "distance-derivation throughput on one thread");
  std::string bench_method;
  evaluation::BenchOptions bo;
  bench_cmd->add_option("--method", bench_method, "rel or dep")->check(CLI::IsMember({"rel", "dep"}))->required();
  bench_cmd->add_option("--length", bo.length, "sentence length n")->capture_default_str();
  bench_cmd->add_option("--repetitions", bo.repetitions, "timed matrices (0 = at least 10^6 token pairs)")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bo.warmup, "untimed matrices first")->capture_default_str();
  bench_cmd->add_option("--tau", bo.tau, "distance clip threshold")->capture_default_str();
  bench_cmd->add_option("--seed", bo.seed, "seed for the random trees")->capture_default_str();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus with dependency heads");
  std::string synth_kind = "proximity", synth_output;
  std::size_t synth_size = 100;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--kind", synth_kind, "lexical or proximity")
      ->check(CLI::IsMember({"lexical", "proximity"}))
      ->capture_default_str();
  synth_cmd->add_option("--size", synth_size, "sentences")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--output", synth_output, "canonical corpus")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      const std::optional<fs::path> file = config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file);
      return do_train(resolve_config(file, overrides), quiet, out, err);
    }
    if (eval_cmd->parsed()) return do_eval(model_dir, eval_inputs, eval_output, out);
    if (decode_cmd->parsed()) return do_decode(model_dir, decode_input, decode_output, out);
    if (pre_cmd->parsed()) return do_preprocess(pre_input, pre_output, pre_chunk, rules, out);
    if (convert_cmd->parsed()) return do_convert(convert_input, convert_output, out, err);
    if (split_cmd->parsed()) return do_split(split_input, split_output, split_seed, out);
    if (stats_cmd->parsed()) return do_stats(stats_inputs, out);
    if (params_cmd->parsed()) return do_params(po, out);
    if (bench_cmd->parsed()) return do_bench(bench_method, bo, out);
    if (synth_cmd->parsed()) return do_synth(synth_kind, synth_size, synth_seed, synth_output, out);
  } catch (const std::exception& e) {
    err << "mug: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mug::cli
