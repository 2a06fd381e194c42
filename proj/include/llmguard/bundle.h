#pragma once

// ModelBundle: the serialized unit behind one classifier-backed detector.
//
// Binary layout (all integers and reals little-endian):
//
//   offset 0   4 bytes   magic "LLMG"
//   offset 4   u32       format version (currently 1)
//   offset 8   u32       header length H in bytes
//   offset 12  H bytes   UTF-8 JSON header: heads, input_dim, hidden_dims,
//                        output_dim, vocabulary, training{seed, epochs,
//                        final_loss}
//   then, for each layer in order: out*in f64 weights (row-major, one row
//   per output unit) followed by out f64 biases
//   last 8     u64       FNV-1a 64 checksum of every preceding byte
//
// See docs/bundle-format.md for the full description.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "llmguard/mlp.h"
#include "llmguard/textprep.h"

namespace llmguard {

inline constexpr std::uint32_t kBundleFormatVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_loss = 0.0;

  bool operator==(const TrainingMetadata&) const = default;
};

struct ModelBundle {
  Vocabulary vocabulary;
  MlpModel model;
  std::vector<std::string> head_names;
  TrainingMetadata training;

  // Throws ShapeError if heads or vocabulary disagree with the model.
  void validate() const;

  // Head probabilities for `text` (vectorize then forward).
  std::vector<double> head_scores(std::string_view text) const;
  // Detector score: the maximum head probability.
  double score(std::string_view text) const;

  bool operator==(const ModelBundle&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::string serialize_bundle(const ModelBundle& bundle);
// Throws UnsupportedVersionError or ParseError (with byte offset).
ModelBundle parse_bundle(std::string_view bytes);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& destination);
ModelBundle load_bundle(const std::filesystem::path& source);

}  // namespace llmguard
