// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "aspectforge/error.hpp"
#include "aspectforge/hash.hpp"

namespace aspectforge {

using nlohmann::json;

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::positive ? "positive" : "negative";
}

Polarity parse_polarity(std::string_view text) {
  if (text == "positive") return Polarity::positive;
  if (text == "negative") return Polarity::negative;
  throw ValidationError("unknown polarity '" + std::string(text) + "'");
}

LabelSpace LabelSpace::build(std::vector<std::string> aspects) {
  if (aspects.empty()) throw ValidationError("label space needs at least one aspect");
  LabelSpace space;
  for (std::size_t i = 0; i < aspects.size(); ++i) {
    const std::string& name = aspects[i];
    const bool blank = std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); });
    if (name.empty() || blank) throw ValidationError("aspect name at position " + std::to_string(i) + " is empty");
    if (!space.aspect_index_.emplace(name, static_cast<int>(i)).second)
      throw ValidationError("duplicate aspect name '" + name + "'");
    const int a = static_cast<int>(i);
    space.labels_.push_back({name, Polarity::positive, positive_index(a)});
    space.labels_.push_back({name, Polarity::negative, negative_index(a)});
  }
  space.aspects_ = std::move(aspects);
  return space;
}

std::optional<int> LabelSpace::find_aspect(std::string_view name) const {
  auto it = aspect_index_.find(std::string(name));
  if (it == aspect_index_.end()) return std::nullopt;
  return it->second;
}

int LabelSpace::index_of(std::string_view aspect, Polarity polarity) const {
  const auto a = find_aspect(aspect);
  if (!a) throw ValidationError("unknown aspect '" + std::string(aspect) + "'");
  return polarity == Polarity::positive ? positive_index(*a) : negative_index(*a);
}

const JointLabel& LabelSpace::label(int index) const {
  if (index < 0 || index >= size())
    throw ValidationError("joint label index " + std::to_string(index) + " outside [0, " + std::to_string(size()) + ")");
  return labels_[static_cast<std::size_t>(index)];
}

std::string LabelSpace::hash() const {
  std::uint64_t state = fnv1a("labelspace\n");
  for (const auto& a : aspects_) state = fnv1a(a + "\n", state);
  return hex_digest(state);
}

bool has_conflict(const LabelSet& labels) {
  for (std::size_t i = 0; i + 1 < labels.size(); ++i)
    if (labels[i] % 2 == 0 && labels[i + 1] == labels[i] + 1) return true;
  return false;
}

// Vocabulary

Vocabulary::Vocabulary()
    : words_{std::string(pad_token), std::string(oov_token)}, frequencies_{0, 0} {
  reindex();
}

void Vocabulary::reindex() {
  index_.clear();
  for (std::size_t i = 2; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw ValidationError("vocabulary word '" + words_[i] + "' appears twice");
  }
}

Vocabulary Vocabulary::fit(std::span<const Review> reviews, std::optional<int> max_words) {
  if (reviews.empty()) throw ValidationError("cannot fit a vocabulary on an empty review list");
  if (max_words && *max_words < 3) throw ValidationError("max_words must be at least 3");

  struct Entry {
    std::int64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<std::string> order;
  for (const auto& review : reviews) {
    for (auto& token : tokenize(review.text)) {
      auto [it, inserted] = counts.try_emplace(token, Entry{0, order.size()});
      if (inserted) order.push_back(token);
      ++it->second.count;
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return counts.at(a).count > counts.at(b).count;
  });
  if (max_words && order.size() > static_cast<std::size_t>(*max_words - 2))
    order.resize(static_cast<std::size_t>(*max_words - 2));

  Vocabulary vocab;
  for (auto& word : order) {
    vocab.frequencies_.push_back(counts.at(word).count);
    vocab.words_.push_back(std::move(word));
  }
  vocab.reindex();
  return vocab;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words, std::vector<std::int64_t> frequencies) {
  if (words.size() < 2 || words[0] != pad_token || words[1] != oov_token)
    throw ValidationError("vocabulary must start with the reserved <pad> and <oov> entries");
  if (frequencies.empty()) frequencies.assign(words.size(), 0);
  if (frequencies.size() != words.size()) throw ValidationError("vocabulary frequency list has the wrong length");
  Vocabulary vocab;
  vocab.words_ = std::move(words);
  vocab.frequencies_ = std::move(frequencies);
  vocab.reindex();
  return vocab;
}

int Vocabulary::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? oov_index : it->second;
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || index >= size()) throw ValidationError("vocabulary index " + std::to_string(index) + " out of range");
  return words_[static_cast<std::size_t>(index)];
}

std::int64_t Vocabulary::frequency(int index) const {
  word(index);
  return frequencies_[static_cast<std::size_t>(index)];
}

std::string Vocabulary::hash() const {
  std::uint64_t state = fnv1a("vocabulary\n");
  for (const auto& w : words_) state = fnv1a(w + "\n", state);
  return hex_digest(state);
}

// Encoding

EncodedExample encode_example(const Review& review, const Vocabulary& vocab, int maxlen, const LabelSpace& space) {
  if (maxlen < 1) throw ValidationError("maxlen must be at least 1");
  EncodedExample ex;
  ex.tokens = Eigen::RowVectorXi::Constant(maxlen, Vocabulary::pad_index);
  const auto words = tokenize(review.text);
  const std::size_t keep = std::min(words.size(), static_cast<std::size_t>(maxlen));
  const std::size_t skip = words.size() - keep;
  const int offset = maxlen - static_cast<int>(keep);
  for (std::size_t i = 0; i < keep; ++i) ex.tokens(offset + static_cast<int>(i)) = vocab.index_of(words[skip + i]);

  ex.target = Eigen::RowVectorXd::Zero(space.size());
  for (const int label : review.gold) {
    if (label < 0 || label >= space.size())
      throw ValidationError("gold label index " + std::to_string(label) + " outside the label space of size " +
                            std::to_string(space.size()));
    ex.target(label) = 1.0;
  }
  return ex;
}

std::vector<EncodedExample> encode_all(std::span<const Review> reviews, const Vocabulary& vocab, int maxlen,
                                       const LabelSpace& space) {
  std::vector<EncodedExample> out;
  out.reserve(reviews.size());
  for (const auto& r : reviews) out.push_back(encode_example(r, vocab, maxlen, space));
  return out;
}

// JSONL corpus

namespace {

std::string at_line(const std::string& message, std::size_t line) {
  return message + ", line " + std::to_string(line);
}

}  // namespace

Corpus parse_corpus(std::istream& in, const LoadOptions& options) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(at_line(std::string("invalid JSON: ") + e.what(), line_no));
    }
    if (!obj.is_object()) throw FormatError(at_line("expected a JSON object", line_no));

    if (!have_header) {
      if (!obj.contains("aspects") || !obj["aspects"].is_array())
        throw FormatError(at_line("header must be {\"aspects\": [...]}", line_no));
      std::vector<std::string> aspects;
      for (const auto& a : obj["aspects"]) {
        if (!a.is_string()) throw FormatError(at_line("aspect names must be strings", line_no));
        aspects.push_back(a.get<std::string>());
      }
      try {
        corpus.space = LabelSpace::build(std::move(aspects));
      } catch (const ValidationError& e) {
        throw FormatError(at_line(e.what(), line_no));
      }
      have_header = true;
      continue;
    }

    if (!obj.contains("text") || !obj["text"].is_string())
      throw FormatError(at_line("review is missing a string \"text\"", line_no));
    Review review;
    review.text = obj["text"].get<std::string>();
    const json labels = obj.value("labels", json::array());
    if (!labels.is_array()) throw FormatError(at_line("\"labels\" must be an array", line_no));
    for (const auto& l : labels) {
      if (!l.is_object() || !l.contains("aspect") || !l.contains("polarity") || !l["aspect"].is_string() ||
          !l["polarity"].is_string())
        throw FormatError(at_line("each label needs string \"aspect\" and \"polarity\"", line_no));
      const auto aspect_name = l["aspect"].get<std::string>();
      const auto polarity_name = l["polarity"].get<std::string>();
      const auto aspect = corpus.space.find_aspect(aspect_name);
      if (!aspect) throw FormatError(at_line("unknown aspect '" + aspect_name + "'", line_no));
      Polarity polarity;
      try {
        polarity = parse_polarity(polarity_name);
      } catch (const ValidationError&) {
        throw FormatError(at_line("unknown polarity '" + polarity_name + "'", line_no));
      }
      review.gold.push_back(polarity == Polarity::positive ? positive_index(*aspect) : negative_index(*aspect));
    }
    std::sort(review.gold.begin(), review.gold.end());
    review.gold.erase(std::unique(review.gold.begin(), review.gold.end()), review.gold.end());

    for (int a = 0; a < corpus.space.aspect_count(); ++a) {
      const bool pos = std::binary_search(review.gold.begin(), review.gold.end(), positive_index(a));
      const bool neg = std::binary_search(review.gold.begin(), review.gold.end(), negative_index(a));
      if (!(pos && neg)) continue;
      const std::string msg = at_line("conflicting polarities for aspect '" + corpus.space.aspects()[a] + "'", line_no);
      if (!options.lenient) throw FormatError(msg);
      if (options.warnings) options.warnings->push_back(msg + " (both labels dropped)");
      std::erase_if(review.gold, [a](int j) { return j / 2 == a; });
    }
    if (review.gold.empty() && !options.allow_empty_gold)
      throw FormatError(at_line("review has no labels", line_no));
    corpus.reviews.push_back(std::move(review));
  }
  if (!have_header) throw FormatError("corpus is empty: missing {\"aspects\": [...]} header");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return parse_corpus(in, options);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << json{{"aspects", corpus.space.aspects()}}.dump() << '\n';
  for (const auto& review : corpus.reviews) {
    json labels = json::array();
    for (const int j : review.gold) {
      const auto& label = corpus.space.label(j);
      labels.push_back({{"aspect", label.aspect}, {"polarity", std::string(to_string(label.polarity))}});
    }
    out << json{{"text", review.text}, {"labels", labels}}.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  write_corpus(out, corpus);
  if (!out) throw IoError("failed writing corpus " + path.string());
}

// Folds

std::vector<int> FoldPlan::fold(int id) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == id) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::complement(int id) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != id) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::sizes() const {
  std::vector<int> out(static_cast<std::size_t>(k), 0);
  for (const int f : assignment) ++out[static_cast<std::size_t>(f)];
  return out;
}

FoldPlan kfold_plan(int n_examples, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold needs k >= 2");
  if (k > n_examples)
    throw ValidationError("k = " + std::to_string(k) + " exceeds the number of examples (" +
                          std::to_string(n_examples) + ")");
  std::vector<int> perm(static_cast<std::size_t>(n_examples));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(perm.size(), 0);
  for (std::size_t pos = 0; pos < perm.size(); ++pos)
    plan.assignment[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return plan;
}

// Synthetic corpus

Corpus synthesize_corpus(int n_aspects, int n_examples, int vocab_size, std::uint64_t seed) {
  if (n_aspects < 1) throw ValidationError("synthesize: need at least one aspect");
  if (n_examples < 1) throw ValidationError("synthesize: need at least one example");
  if (vocab_size < 4 * n_aspects + 10)
    throw ValidationError("synthesize: vocab_size must be at least 4 * n_aspects + 10 = " +
                          std::to_string(4 * n_aspects + 10));

  std::vector<std::string> aspects;
  for (int i = 0; i < n_aspects; ++i) aspects.push_back("aspect" + std::to_string(i));
  Corpus corpus;
  corpus.space = LabelSpace::build(aspects);

  const int fillers = vocab_size - 4 * n_aspects;
  const int max_aspects = std::min(3, n_aspects);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> aspect_count(1, max_aspects);
  std::uniform_int_distribution<int> filler_count(2, 8);
  std::uniform_int_distribution<int> filler_word(0, fillers - 1);
  std::bernoulli_distribution coin(0.5);

  std::vector<int> order(static_cast<std::size_t>(n_aspects));
  for (int e = 0; e < n_examples; ++e) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int m = aspect_count(rng);

    std::vector<std::string> units;
    Review review;
    for (int s = 0; s < m; ++s) {
      const int a = order[static_cast<std::size_t>(s)];
      const bool positive = coin(rng);
      const std::string topic = "topic" + std::to_string(a) + (coin(rng) ? "x" : "y");
      units.push_back(topic + " " + (positive ? "good" : "bad") + std::to_string(a));
      review.gold.push_back(positive ? positive_index(a) : negative_index(a));
    }
    const int f = filler_count(rng);
    for (int s = 0; s < f; ++s) units.push_back("filler" + std::to_string(filler_word(rng)));
    std::shuffle(units.begin(), units.end(), rng);

    std::ostringstream text;
    for (std::size_t u = 0; u < units.size(); ++u) text << (u ? " " : "") << units[u];
    review.text = text.str();
    std::sort(review.gold.begin(), review.gold.end());
    corpus.reviews.push_back(std::move(review));
  }
  return corpus;
}

}  // namespace aspectforge
