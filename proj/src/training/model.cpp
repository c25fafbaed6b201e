#include "mug/training/model.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "mug/errors.h"

namespace mug::training {

using numerics::Parameter;
using numerics::Tensor;

namespace {

constexpr char kMagic[4] = {'M', 'U', 'G', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ValidationError(path.string() + ": truncated weights file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

Example make_example(const data::Sentence& sentence, const data::Vocabulary& vocab,
                     const structure::StructureConfig& structure) {
  sentence.validate();
  Example e;
  e.ids = vocab.encode(sentence.tokens);
  const std::size_t n = sentence.size();
  switch (structure.kind) {
    case structure::StructureKind::kNone:
      break;
    case structure::StructureKind::kRelative:
      e.distances = structure::augmented_distance_matrix(structure, n);
      break;
    case structure::StructureKind::kDependency: {
      if (!sentence.heads) throw ValidationError("dependency adapter: sentence has no dependency heads");
      const auto graph = structure::DependencyGraph::from_heads(*sentence.heads);
      e.distances = structure::augmented_distance_matrix(structure, n, &graph);
      break;
    }
  }
  e.gold = parser::build_gold(n, sentence.triplets);
  e.triplets = sentence.triplets;
  std::sort(e.triplets.begin(), e.triplets.end());
  e.triplets.erase(std::unique(e.triplets.begin(), e.triplets.end()), e.triplets.end());
  return e;
}

std::vector<Example> make_examples(std::span<const data::Sentence> sentences, const data::Vocabulary& vocab,
                                   const structure::StructureConfig& structure) {
  std::vector<Example> out;
  out.reserve(sentences.size());
  for (const data::Sentence& s : sentences) out.push_back(make_example(s, vocab, structure));
  return out;
}

MugModel::MugModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      encoder_([&] {
        numerics::Initializer init(seed);
        return encoder::Encoder(config.encoder, init);
      }()),
      parser_([&] {
        // Parser weights draw from their own stream so they do not depend on the adapter.
        numerics::Initializer init(seed ^ 0x9E3779B97F4A7C15ULL);
        return parser::TripletParser(config.parser_config(), init);
      }()) {}

ForwardResult MugModel::forward(numerics::Tape& tape, const Example& example) const {
  const auto* distances = example.distances ? &*example.distances : nullptr;
  const encoder::EncodedSequence encoded = encoder_.encode(tape, example.ids, distances);
  return {parser_.tag_probs(tape, encoded.content, parser::Role::kAspect),
          parser_.tag_probs(tape, encoded.content, parser::Role::kOpinion),
          parser_.relation_probs(tape, encoded.content)};
}

Prediction MugModel::predict(const Example& example) const {
  numerics::Tape tape(false);
  const ForwardResult f = forward(tape, example);
  Prediction p;
  p.aspect.probs = f.aspect.value();
  p.aspect.tags = parser::argmax_tags(p.aspect.probs);
  p.opinion.probs = f.opinion.value();
  p.opinion.tags = parser::argmax_tags(p.opinion.probs);
  p.relations = parser::SentimentRelationMap::from_probs(example.size(), f.relations.value());
  p.triplets = parser::decode_grid(parser::decode_bio(p.aspect.tags), parser::decode_bio(p.opinion.tags), p.relations);
  return p;
}

std::vector<numerics::ParamGroup> MugModel::param_groups() {
  return {encoder_.encoder_group(), encoder_.adapter_group(), parser_.group()};
}

std::vector<Parameter*> MugModel::parameters() {
  std::vector<Parameter*> all;
  for (const auto& g : param_groups()) all.insert(all.end(), g.params.begin(), g.params.end());
  return all;
}

std::size_t MugModel::parameter_count() {
  std::size_t total = 0;
  for (const auto& g : param_groups()) total += g.count();
  return total;
}

std::vector<Tensor> MugModel::snapshot() {
  std::vector<Tensor> out;
  for (Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

void MugModel::restore(const std::vector<Tensor>& values) {
  const auto params = parameters();
  if (values.size() != params.size()) throw ShapeError("restore: snapshot has a different parameter count");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (values[k].shape() != params[k]->value.shape()) throw ShapeError("restore: shape differs for " + params[k]->name);
    params[k]->value = values[k];
  }
}

void MugModel::save(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto params = parameters();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
    for (double v : p->value.data()) put<double>(out, v);
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

void MugModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ValidationError(path.string() + ": not a weights file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) throw ValidationError(path.string() + ": unsupported weights version " + std::to_string(version));
  const auto params = parameters();
  const auto sections = get<std::uint32_t>(in, path);
  if (sections != params.size()) {
    throw ValidationError(path.string() + ": " + std::to_string(sections) + " sections for a model with " +
                          std::to_string(params.size()) + " tensors");
  }
  std::vector<Tensor> values;
  for (const Parameter* p : params) {
    std::string name(get<std::uint32_t>(in, path), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw ValidationError(path.string() + ": truncated");
    if (name != p->name) throw ValidationError(path.string() + ": expected section " + p->name + ", found " + name);
    numerics::Shape shape(get<std::uint32_t>(in, path));
    for (std::size_t& d : shape) d = get<std::uint64_t>(in, path);
    if (shape != p->value.shape()) throw ValidationError(path.string() + ": shape mismatch for " + name);
    Tensor t(shape);
    for (double& v : t.data()) v = get<double>(in, path);
    values.push_back(std::move(t));
  }
  restore(values);
}

}  // namespace mug::training
