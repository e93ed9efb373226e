// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aspectforge {

/// Sorted, duplicate-free joint-label indices.
using LabelSet = std::vector<int>;

enum class Polarity { positive, negative };

std::string_view to_string(Polarity polarity);
Polarity parse_polarity(std::string_view text);

struct JointLabel {
  std::string aspect;
  Polarity polarity = Polarity::positive;
  int index = 0;
};

/// The joint label set C x P. Aspect i owns index 2i (positive) and 2i+1
/// (negative).
class LabelSpace {
 public:
  LabelSpace() = default;

  /// Throws ValidationError on an empty list, an empty or blank name, or a
  /// duplicate name.
  static LabelSpace build(std::vector<std::string> aspects);

  const std::vector<std::string>& aspects() const { return aspects_; }
  const std::vector<JointLabel>& labels() const { return labels_; }
  int aspect_count() const { return static_cast<int>(aspects_.size()); }
  int size() const { return static_cast<int>(labels_.size()); }

  std::optional<int> find_aspect(std::string_view name) const;
  int index_of(std::string_view aspect, Polarity polarity) const;
  const JointLabel& label(int index) const;

  std::string hash() const;

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) { return a.aspects_ == b.aspects_; }

 private:
  std::vector<std::string> aspects_;
  std::vector<JointLabel> labels_;
  std::unordered_map<std::string, int> aspect_index_;
};

constexpr int positive_index(int aspect) { return 2 * aspect; }
constexpr int negative_index(int aspect) { return 2 * aspect + 1; }

/// True when some aspect carries both polarities.
bool has_conflict(const LabelSet& labels);

struct Review {
  std::string text;
  LabelSet gold;
};

/// Case-folds, replaces punctuation with spaces, and splits on Unicode
/// whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// Word index. 0 is padding, 1 is out-of-vocabulary; the remaining indices
/// follow descending corpus frequency, ties broken by first occurrence.
class Vocabulary {
 public:
  static constexpr int pad_index = 0;
  static constexpr int oov_index = 1;
  static constexpr std::string_view pad_token = "<pad>";
  static constexpr std::string_view oov_token = "<oov>";

  Vocabulary();

  /// `max_words` caps the size including the two reserved entries.
  static Vocabulary fit(std::span<const Review> reviews, std::optional<int> max_words = std::nullopt);

  /// Rebuilds a vocabulary from its words in index order (reserved entries
  /// first), e.g. when restoring a checkpoint.
  static Vocabulary from_words(std::vector<std::string> words, std::vector<std::int64_t> frequencies = {});

  int size() const { return static_cast<int>(words_.size()); }
  int index_of(std::string_view word) const;
  const std::string& word(int index) const;
  std::int64_t frequency(int index) const;
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::int64_t>& frequencies() const { return frequencies_; }

  std::string hash() const;

 private:
  void reindex();

  std::vector<std::string> words_;
  std::vector<std::int64_t> frequencies_;
  std::unordered_map<std::string, int> index_;
};

struct EncodedExample {
  Eigen::RowVectorXi tokens;  // exactly maxlen entries
  Eigen::RowVectorXd target;  // multi-hot over the joint labels
};

/// Pre-pads with index 0 and keeps the last `maxlen` tokens of long texts.
EncodedExample encode_example(const Review& review, const Vocabulary& vocab, int maxlen, const LabelSpace& space);

std::vector<EncodedExample> encode_all(std::span<const Review> reviews, const Vocabulary& vocab, int maxlen,
                                       const LabelSpace& space);

struct Corpus {
  std::vector<Review> reviews;
  LabelSpace space;
};

struct LoadOptions {
  /// Downgrade a review that carries both polarities of one aspect from an
  /// error to a warning; the conflicting aspect's labels are dropped.
  bool lenient = false;
  bool allow_empty_gold = false;
  std::vector<std::string>* warnings = nullptr;
};

/// JSONL: a header line {"aspects": [...]}, then one
/// {"text": ..., "labels": [{"aspect": ..., "polarity": ...}]} per line.
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});
Corpus parse_corpus(std::istream& in, const LoadOptions& options = {});
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
void write_corpus(std::ostream& out, const Corpus& corpus);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // example index -> fold id

  std::vector<int> fold(int id) const;
  std::vector<int> complement(int id) const;
  std::vector<int> sizes() const;
};

/// Seeded permutation followed by round-robin assignment.
FoldPlan kfold_plan(int n_examples, int k, std::uint64_t seed);

/// Keyword-separable stand-in corpus. Aspect i is named "aspect<i>" and has
/// aspect keywords "topic<i>x" / "topic<i>y"; its polarity keywords are
/// "good<i>" and "bad<i>". Every gold label is planted as an adjacent
/// (aspect keyword, polarity keyword) pair; the rest is filler "filler<k>".
Corpus synthesize_corpus(int n_aspects, int n_examples, int vocab_size, std::uint64_t seed);

}  // namespace aspectforge
