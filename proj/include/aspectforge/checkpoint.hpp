// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "aspectforge/corpus.hpp"
#include "aspectforge/models.hpp"

namespace aspectforge {

struct Checkpoint {
  Network network;
  Vocabulary vocabulary;
  LabelSpace space;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Digest of the architecture kind and model configuration.
std::string config_hash(ArchitectureKind kind, const ModelConfig& config);

/// JSON container: architecture, config, vocabulary, label space, the three
/// digests guarding them, and every parameter as {shape, trainable, values}
/// in row-major order. Doubles are written in shortest round-trip form, so a
/// load reproduces the parameters bit for bit.
std::string serialize_checkpoint(const Network& net, const Vocabulary& vocab, const LabelSpace& space);
void save_checkpoint(const std::filesystem::path& path, const Network& net, const Vocabulary& vocab,
                     const LabelSpace& space);

/// Throws FormatError for malformed content and HashMismatchError when a
/// stored digest disagrees with the content it covers.
Checkpoint parse_checkpoint(const std::string& text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws HashMismatchError unless the checkpoint was trained against the
/// same vocabulary and label space.
void verify_compatible(const Checkpoint& checkpoint, const Vocabulary& vocab, const LabelSpace& space);

}  // namespace aspectforge
