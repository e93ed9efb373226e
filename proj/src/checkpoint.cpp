// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "aspectforge/hash.hpp"

namespace aspectforge {

using nlohmann::json;

namespace {
constexpr const char* format_tag = "aspectforge-checkpoint";
constexpr int format_version = 1;
}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return json{{"embedding_dim", c.embedding_dim},   {"maxlen", c.maxlen},
              {"hidden_units", c.hidden_units},     {"conv_filters", c.conv_filters},
              {"kernel_size", c.kernel_size},       {"dropout_rate", c.dropout_rate},
              {"batchnorm_enabled", c.batchnorm_enabled}, {"vocab_size", c.vocab_size},
              {"n_joint_labels", c.n_joint_labels}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.maxlen = j.at("maxlen").get<int>();
  c.hidden_units = j.at("hidden_units").get<int>();
  c.conv_filters = j.at("conv_filters").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.batchnorm_enabled = j.at("batchnorm_enabled").get<bool>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.n_joint_labels = j.at("n_joint_labels").get<int>();
  return c;
}

std::string config_hash(ArchitectureKind kind, const ModelConfig& config) {
  const json j{{"architecture", std::string(to_string(kind))}, {"config", model_config_to_json(config)}};
  return hex_digest(fnv1a(j.dump()));
}

std::string serialize_checkpoint(const Network& net, const Vocabulary& vocab, const LabelSpace& space) {
  if (vocab.size() != net.config.vocab_size)
    throw ValidationError("checkpoint: vocabulary size differs from the network's embedding rows");
  if (space.size() != net.config.n_joint_labels)
    throw ValidationError("checkpoint: label space size differs from the network's output width");
  json params = json::object();
  for (const auto& [name, p] : net.params) {
    json values = json::array();
    for (nn::Index i = 0; i < p.value.size(); ++i) values.push_back(p.value.data()[i]);
    params[name] = json{{"shape", {p.value.rows(), p.value.cols()}}, {"trainable", p.trainable}, {"values", values}};
  }
  const json doc{{"format", format_tag},
                 {"version", format_version},
                 {"architecture", std::string(to_string(net.kind))},
                 {"config", model_config_to_json(net.config)},
                 {"config_hash", config_hash(net.kind, net.config)},
                 {"vocabulary", {{"words", vocab.words()}, {"frequencies", vocab.frequencies()}}},
                 {"vocabulary_hash", vocab.hash()},
                 {"label_space", {{"aspects", space.aspects()}}},
                 {"label_space_hash", space.hash()},
                 {"parameters", params}};
  return doc.dump() + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const Vocabulary& vocab,
                     const LabelSpace& space) {
  const std::string text = serialize_checkpoint(net, vocab, space);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << text;
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != format_tag) throw FormatError("not an aspectforge checkpoint");
    if (doc.at("version").get<int>() != format_version) throw FormatError("unsupported checkpoint version");

    const auto kind = parse_architecture(doc.at("architecture").get<std::string>());
    const auto config = model_config_from_json(doc.at("config"));
    if (doc.at("config_hash").get<std::string>() != config_hash(kind, config))
      throw HashMismatchError("checkpoint config hash mismatch");

    auto vocab = Vocabulary::from_words(doc.at("vocabulary").at("words").get<std::vector<std::string>>(),
                                        doc.at("vocabulary").at("frequencies").get<std::vector<std::int64_t>>());
    if (doc.at("vocabulary_hash").get<std::string>() != vocab.hash())
      throw HashMismatchError("checkpoint vocabulary hash mismatch");
    auto space = LabelSpace::build(doc.at("label_space").at("aspects").get<std::vector<std::string>>());
    if (doc.at("label_space_hash").get<std::string>() != space.hash())
      throw HashMismatchError("checkpoint label-space hash mismatch");
    if (vocab.size() != config.vocab_size || space.size() != config.n_joint_labels)
      throw FormatError("checkpoint vocabulary or label space disagrees with its config");

    Network net = build_network(kind, config, 0);
    const auto& params = doc.at("parameters");
    if (params.size() != net.params.size()) throw FormatError("checkpoint parameter list does not match architecture");
    for (auto& [name, p] : net.params) {
      if (!params.contains(name)) throw FormatError("checkpoint is missing parameter " + name);
      const auto& entry = params.at(name);
      const auto shape = entry.at("shape").get<std::vector<nn::Index>>();
      if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols())
        throw FormatError("checkpoint parameter " + name + " has the wrong shape");
      const auto& values = entry.at("values");
      if (static_cast<nn::Index>(values.size()) != p.value.size())
        throw FormatError("checkpoint parameter " + name + " has the wrong number of values");
      for (nn::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = values[static_cast<std::size_t>(i)].get<double>();
      if (!p.value.allFinite()) throw FormatError("checkpoint parameter " + name + " holds non-finite values");
    }
    return Checkpoint{std::move(net), std::move(vocab), std::move(space)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

void verify_compatible(const Checkpoint& checkpoint, const Vocabulary& vocab, const LabelSpace& space) {
  if (checkpoint.vocabulary.hash() != vocab.hash())
    throw HashMismatchError("vocabulary hash does not match the checkpoint");
  if (checkpoint.space.hash() != space.hash())
    throw HashMismatchError("label-space hash does not match the checkpoint");
}

}  // namespace aspectforge
