// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/cli/commands.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "aspectforge/hash.hpp"

namespace aspectforge::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const RunConfig& config) {
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  write_text(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

std::string digest_of(const std::string& path) {
  if (!fs::exists(path)) throw IoError("corpus not found: " + path);
  return file_digest(path);
}

Corpus read_corpus(const std::string& path, const RunConfig& config, std::ostream& log) {
  std::vector<std::string> warnings;
  LoadOptions options;
  options.lenient = config.lenient;
  options.allow_empty_gold = config.allow_unlabeled;
  options.warnings = &warnings;
  Corpus corpus = load_corpus(path, options);
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  if (corpus.reviews.empty()) throw ValidationError("corpus " + path + " has no reviews");
  return corpus;
}

Checkpoint read_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
  try {
    return load_checkpoint(path);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptCheckpointError("corrupt checkpoint " + path + ": " + e.what());
  }
}

ModelConfig model_for(const RunConfig& config, const Vocabulary& vocab, const LabelSpace& space) {
  ModelConfig model = config.model;
  model.vocab_size = vocab.size();
  model.n_joint_labels = space.size();
  model.validate();
  return model;
}

CptConfig cpt_for(const RunConfig& config) {
  CptConfig cpt{config.threshold, config.cpt_margin};
  cpt.validate();
  return cpt;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& items, const std::vector<int>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (const int i : indices) out.push_back(items[static_cast<std::size_t>(i)]);
  return out;
}

// Runs fn(0..n-1) on up to worker_threads() threads. Results are written by
// index, so the outcome does not depend on scheduling. The first failure by
// job index is rethrown after every worker has joined.
template <typename Fn>
void run_jobs(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_threads()));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class ProgressLog {
 public:
  explicit ProgressLog(std::ostream& log) : log_(log) {}

  EpochCallback callback(std::string prefix) {
    return [this, prefix = std::move(prefix)](int epoch, double loss) {
      std::ostringstream line;
      line << prefix << "epoch=" << epoch << " loss=" << std::setprecision(6) << loss << '\n';
      const std::lock_guard lock(mutex_);
      log_ << line.str() << std::flush;
    };
  }

 private:
  std::ostream& log_;
  std::mutex mutex_;
};

constexpr std::uint64_t init_stream = 1;
constexpr std::uint64_t train_stream = 2;
constexpr std::uint64_t split_stream = 3;

TrainedModel train_one(ArchitectureKind kind, const ModelConfig& model, const TrainConfig& train,
                       std::span<const EncodedExample> data, std::uint64_t seed, const EpochCallback& cb) {
  TrainedModel trained{kind, seed, build_network(kind, model, derive_seed(seed, init_stream)), {}};
  trained.history = train_model(trained.network, data, train, derive_seed(seed, train_stream), cb);
  return trained;
}

json history_to_json(const TrainedModel& m) {
  return json{{"architecture", std::string(to_string(m.kind))}, {"seed", m.seed}, {"epoch_loss", m.history.epoch_loss}};
}

void aggregate(ArchitectureReports& r) {
  std::vector<MetricsReport> without, with;
  for (const auto& pair : r.runs) {
    without.push_back(pair.without_cpt);
    with.push_back(pair.with_cpt);
  }
  r.without_cpt = aggregate_runs(without);
  r.with_cpt = aggregate_runs(with);
}

std::vector<ReportRow> aggregate_rows(std::span<const ArchitectureReports> reports) {
  std::vector<ReportRow> rows;
  for (const auto& r : reports) {
    rows.push_back({display_name(r.kind), r.without_cpt.mean});
    rows.push_back({display_name(r.kind), r.with_cpt.mean});
  }
  return rows;
}

json pair_to_json(const CptPair& p) {
  return json{{"without_cpt", report_to_json(p.without_cpt)}, {"with_cpt", report_to_json(p.with_cpt)}};
}

json reports_to_json(const RunConfig& config, std::span<const ArchitectureReports> reports, const char* unit) {
  json models = json::array();
  for (const auto& r : reports) {
    json runs = json::array();
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      json entry = pair_to_json(r.runs[i]);
      entry[unit] = i;
      entry["seed"] = r.seeds[i];
      runs.push_back(entry);
    }
    models.push_back({{"architecture", std::string(to_string(r.kind))},
                      {std::string(unit) + "s", runs},
                      {"aggregate",
                       {{"without_cpt", aggregate_to_json(r.without_cpt)}, {"with_cpt", aggregate_to_json(r.with_cpt)}}}});
  }
  return json{{"command", std::string(to_string(config.command))},
              {"beta", config.beta},
              {"threshold", config.threshold},
              {"cpt_margin", config.cpt_margin},
              {"primary_cpt", config.cpt},
              {"models", models}};
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

json manifest_to_json(const RunManifest& m) {
  json timings = json::object();
  for (const auto& [name, s] : m.timings) timings[name] = s;
  return json{{"manifest_version", 1},
              {"command", std::string(to_string(m.config.command))},
              {"config", config_to_json(m.config)},
              {"corpus_hash", m.corpus_hash},
              {"test_corpus_hash", m.test_corpus_hash},
              {"seeds", m.seeds},
              {"artifacts", m.artifacts},
              {"timings_seconds", timings}};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int worker_threads() {
  if (const char* env = std::getenv("ASPECTFORGE_THREADS"); env != nullptr && *env != '\0') {
    const std::string_view s(env);
    int n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size() || n < 1)
      throw UsageError("ASPECTFORGE_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return n;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::string display_name(ArchitectureKind kind) {
  switch (kind) {
    case ArchitectureKind::cnn: return "CNN";
    case ArchitectureKind::lstm: return "LSTM";
    case ArchitectureKind::bilstm: return "BiLSTM";
    case ArchitectureKind::gru: return "GRU";
  }
  return "?";
}

std::string emit_report(std::span<const ReportRow> rows, ReportFormat format) {
  if (rows.empty()) throw ValidationError("emit_report: no reports");
  for (const auto& row : rows)
    if (row.report.beta != rows.front().report.beta) throw ValidationError("emit_report: reports mix beta values");
  if (format == ReportFormat::table) return render_example_table(rows) + "\n" + render_label_table(rows);
  json out = json::array();
  for (const auto& row : rows) out.push_back({{"model", row.model}, {"report", report_to_json(row.report)}});
  return out.dump(2) + "\n";
}

TrainOutcome run_train(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require(!config.corpus.empty(), "train requires --corpus");
  const auto start = Clock::now();
  RunManifest manifest;
  manifest.config = config;
  manifest.corpus_hash = digest_of(config.corpus);
  const fs::path dir = prepare_out(config);
  for (const auto kind : config.architectures) {
    manifest.seeds.push_back(config.seed);
    manifest.artifacts.push_back((dir / (std::string(to_string(kind)) + ".ckpt.json")).string());
    manifest.artifacts.push_back((dir / (std::string(to_string(kind)) + ".history.json")).string());
  }
  write_manifest(dir, manifest);

  const Corpus corpus = read_corpus(config.corpus, config, log);
  TrainOutcome outcome{Vocabulary::fit(corpus.reviews, config.max_words), corpus.space, {}, {}};
  const ModelConfig model = model_for(config, outcome.vocabulary, outcome.space);
  const auto data = encode_all(corpus.reviews, outcome.vocabulary, model.maxlen, outcome.space);
  manifest.timings.emplace_back("prepare", seconds_since(start));

  const auto train_start = Clock::now();
  ProgressLog progress(log);
  outcome.models.resize(config.architectures.size());
  run_jobs(config.architectures.size(), [&](std::size_t i) {
    const auto kind = config.architectures[i];
    outcome.models[i] = train_one(kind, model, config.train, data, config.seed,
                                  progress.callback("arch=" + std::string(to_string(kind)) + " "));
  });
  manifest.timings.emplace_back("train", seconds_since(train_start));

  std::size_t artifact = 0;
  for (const auto& m : outcome.models) {
    save_checkpoint(manifest.artifacts[artifact++], m.network, outcome.vocabulary, outcome.space);
    write_text(manifest.artifacts[artifact++], history_to_json(m).dump(2) + "\n");
    out << to_string(m.kind) << ": final loss " << std::setprecision(6) << m.history.epoch_loss.back() << '\n';
  }
  manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, manifest);
  outcome.manifest = manifest;
  return outcome;
}

EvaluateOutcome run_evaluate(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require(!config.corpus.empty(), "evaluate requires --corpus");
  const auto start = Clock::now();
  const CptConfig cpt = cpt_for(config);
  RunManifest manifest;
  manifest.config = config;
  manifest.corpus_hash = digest_of(config.corpus);
  if (!config.test_corpus.empty()) manifest.test_corpus_hash = digest_of(config.test_corpus);
  const fs::path dir = prepare_out(config);
  const fs::path report_path = dir / "evaluate_report.json";
  EvaluateOutcome outcome;

  if (!config.checkpoint.empty()) {
    // Score an existing model on the whole corpus.
    manifest.artifacts.push_back(report_path.string());
    write_manifest(dir, manifest);
    Checkpoint ckpt = read_checkpoint(config.checkpoint);
    const Corpus corpus = read_corpus(config.corpus, config, log);
    if (!(corpus.space == ckpt.space))
      throw HashMismatchError("label space of " + config.corpus + " (" + corpus.space.hash() +
                              ") differs from the checkpoint's (" + ckpt.space.hash() + ")");
    const auto data = encode_all(corpus.reviews, ckpt.vocabulary, ckpt.network.config.maxlen, ckpt.space);
    ArchitectureReports r;
    r.kind = ckpt.network.kind;
    r.seeds = {0};
    r.runs = {evaluate_with_and_without_cpt(ckpt.network, data, cpt, config.beta)};
    aggregate(r);
    outcome.reports.push_back(r);
  } else {
    const int runs = config.effective_runs();
    for (int i = 0; i < runs; ++i) manifest.seeds.push_back(config.seed + static_cast<std::uint64_t>(i));
    manifest.artifacts.push_back(report_path.string());
    write_manifest(dir, manifest);

    const Corpus corpus = read_corpus(config.corpus, config, log);
    std::vector<Review> train_reviews, test_reviews;
    if (!config.test_corpus.empty()) {
      const Corpus test = read_corpus(config.test_corpus, config, log);
      if (!(test.space == corpus.space))
        throw HashMismatchError("label space of " + config.test_corpus + " differs from " + config.corpus);
      train_reviews = corpus.reviews;
      test_reviews = test.reviews;
    } else {
      const int n = static_cast<int>(corpus.reviews.size());
      if (n < 2) throw ValidationError("evaluate needs at least two reviews to split");
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(derive_seed(config.seed, split_stream));
      std::shuffle(order.begin(), order.end(), rng);
      const int n_test = std::clamp(static_cast<int>(std::lround(config.test_fraction * n)), 1, n - 1);
      test_reviews = pick(corpus.reviews, std::vector<int>(order.begin(), order.begin() + n_test));
      train_reviews = pick(corpus.reviews, std::vector<int>(order.begin() + n_test, order.end()));
    }
    const Vocabulary vocab = Vocabulary::fit(train_reviews, config.max_words);
    const ModelConfig model = model_for(config, vocab, corpus.space);
    const auto train = encode_all(train_reviews, vocab, model.maxlen, corpus.space);
    const auto test = encode_all(test_reviews, vocab, model.maxlen, corpus.space);

    const std::size_t n_arch = config.architectures.size();
    const auto n_runs = static_cast<std::size_t>(runs);
    outcome.reports.resize(n_arch);
    for (std::size_t a = 0; a < n_arch; ++a) {
      outcome.reports[a].kind = config.architectures[a];
      outcome.reports[a].seeds = manifest.seeds;
      outcome.reports[a].runs.resize(n_runs);
    }
    ProgressLog progress(log);
    run_jobs(n_arch * n_runs, [&](std::size_t job) {
      const std::size_t a = job / n_runs, i = job % n_runs;
      const auto kind = config.architectures[a];
      const auto trained = train_one(
          kind, model, config.train, train, manifest.seeds[i],
          progress.callback("arch=" + std::string(to_string(kind)) + " run=" + std::to_string(i) + " "));
      outcome.reports[a].runs[i] = evaluate_with_and_without_cpt(trained.network, test, cpt, config.beta);
    });
    for (auto& r : outcome.reports) aggregate(r);
  }

  write_text(report_path, reports_to_json(config, outcome.reports, "run").dump(2) + "\n");
  out << emit_report(aggregate_rows(outcome.reports), config.format);
  manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, manifest);
  outcome.manifest = manifest;
  return outcome;
}

CrossvalOutcome run_crossval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require(!config.corpus.empty(), "crossval requires --corpus");
  const auto start = Clock::now();
  const CptConfig cpt = cpt_for(config);
  RunManifest manifest;
  manifest.config = config;
  manifest.corpus_hash = digest_of(config.corpus);
  const fs::path dir = prepare_out(config);
  const auto repetitions = static_cast<std::size_t>(config.effective_runs());
  const auto k = static_cast<std::size_t>(config.k);
  const std::size_t n_arch = config.architectures.size();

  // Fold f of repetition r is run index r*k + f and uses seed + that index.
  auto model_path = [&](ArchitectureKind kind, std::size_t r, std::size_t f) {
    std::string name = std::string(to_string(kind)) + ".fold" + std::to_string(f);
    if (repetitions > 1) name += ".rep" + std::to_string(r);
    return (dir / "crossval" / (name + ".ckpt.json")).string();
  };
  for (std::size_t run = 0; run < repetitions * k; ++run) manifest.seeds.push_back(config.seed + run);
  for (const auto kind : config.architectures)
    for (std::size_t r = 0; r < repetitions; ++r)
      for (std::size_t f = 0; f < k; ++f) manifest.artifacts.push_back(model_path(kind, r, f));
  const fs::path report_path = dir / "crossval_report.json";
  manifest.artifacts.push_back(report_path.string());
  write_manifest(dir, manifest);

  const Corpus corpus = read_corpus(config.corpus, config, log);
  const int n = static_cast<int>(corpus.reviews.size());
  if (n < config.k) throw ValidationError("crossval: " + std::to_string(n) + " reviews cannot fill " +
                                          std::to_string(config.k) + " folds");
  CrossvalOutcome outcome;
  for (std::size_t r = 0; r < repetitions; ++r)
    outcome.plans.push_back(kfold_plan(n, config.k, derive_seed(config.seed + r, split_stream)));

  outcome.reports.resize(n_arch);
  for (std::size_t a = 0; a < n_arch; ++a) {
    outcome.reports[a].kind = config.architectures[a];
    outcome.reports[a].seeds = manifest.seeds;
    outcome.reports[a].runs.resize(repetitions * k);
  }
  std::error_code ec;
  fs::create_directories(dir / "crossval", ec);
  if (ec) throw IoError("cannot create " + (dir / "crossval").string());

  ProgressLog progress(log);
  const std::size_t per_arch = repetitions * k;
  run_jobs(n_arch * per_arch, [&](std::size_t job) {
    const std::size_t a = job / per_arch, run = job % per_arch, r = run / k, f = run % k;
    const auto kind = config.architectures[a];
    const auto& plan = outcome.plans[r];
    const auto train_reviews = pick(corpus.reviews, plan.complement(static_cast<int>(f)));
    const auto test_reviews = pick(corpus.reviews, plan.fold(static_cast<int>(f)));
    const Vocabulary vocab = Vocabulary::fit(train_reviews, config.max_words);
    const ModelConfig model = model_for(config, vocab, corpus.space);
    const auto train = encode_all(train_reviews, vocab, model.maxlen, corpus.space);
    const auto test = encode_all(test_reviews, vocab, model.maxlen, corpus.space);
    const auto trained = train_one(kind, model, config.train, train, manifest.seeds[run],
                                   progress.callback("arch=" + std::string(to_string(kind)) +
                                                     " fold=" + std::to_string(f) + " "));
    save_checkpoint(model_path(kind, r, f), trained.network, vocab, corpus.space);
    outcome.reports[a].runs[run] = evaluate_with_and_without_cpt(trained.network, test, cpt, config.beta);
  });
  for (auto& r : outcome.reports) aggregate(r);

  json report = reports_to_json(config, outcome.reports, "fold");
  json plans = json::array();
  for (const auto& plan : outcome.plans) plans.push_back(plan.sizes());
  report["k"] = config.k;
  report["fold_sizes"] = plans;
  write_text(report_path, report.dump(2) + "\n");
  out << emit_report(aggregate_rows(outcome.reports), config.format);
  manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, manifest);
  outcome.manifest = manifest;
  return outcome;
}

PredictOutcome run_predict(const RunConfig& config, std::ostream& out, std::ostream&) {
  require(!config.checkpoint.empty(), "predict requires --checkpoint");
  require(!config.input.empty() || !config.texts.empty(), "predict requires --input or --text");
  const auto start = Clock::now();
  const CptConfig cpt = cpt_for(config);
  RunManifest manifest;
  manifest.config = config;
  if (!config.input.empty()) manifest.corpus_hash = digest_of(config.input);
  const fs::path dir = prepare_out(config);
  const fs::path path = dir / "predictions.jsonl";
  manifest.artifacts.push_back(path.string());
  write_manifest(dir, manifest);

  const Checkpoint ckpt = read_checkpoint(config.checkpoint);
  PredictOutcome outcome;
  outcome.texts = config.input.empty() ? config.texts : read_lines(config.input);
  outcome.predictions = predict_texts(ckpt.network, outcome.texts, ckpt.vocabulary, ckpt.space, cpt, config.cpt);
  const std::string jsonl = prediction_jsonl(outcome.predictions, outcome.texts, ckpt.space);
  write_text(path, jsonl);
  out << jsonl;
  manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, manifest);
  outcome.manifest = manifest;
  return outcome;
}

RunManifest run_synthesize(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto start = Clock::now();
  RunManifest manifest;
  manifest.config = config;
  manifest.seeds.push_back(config.seed);
  const fs::path dir = prepare_out(config);
  const fs::path path = dir / "corpus.jsonl";
  manifest.artifacts.push_back(path.string());
  write_manifest(dir, manifest);
  const Corpus corpus = synthesize_corpus(config.aspects, config.examples, config.vocab_size, config.seed);
  write_corpus(path, corpus);
  out << path.string() << '\n';
  manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, manifest);
  return manifest;
}

GradcheckOutcome run_gradcheck(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto start = Clock::now();
  GradcheckOutcome outcome;
  outcome.manifest.config = config;
  outcome.manifest.seeds.push_back(config.seed);
  const fs::path dir = prepare_out(config);
  const fs::path path = dir / "gradcheck.json";
  outcome.manifest.artifacts.push_back(path.string());
  write_manifest(dir, outcome.manifest);

  GradcheckSuiteOptions options;
  options.trials = config.runs.value_or(options.trials);
  options.seed = config.seed;
  outcome.cases = run_gradcheck_suite(options);
  outcome.passed = true;
  json cases = json::array();
  for (const auto& c : outcome.cases) {
    const bool ok = c.max_rel_error <= gradcheck_tolerance;
    outcome.passed = outcome.passed && ok;
    out << (ok ? "ok   " : "FAIL ") << std::left << std::setw(24) << c.name << " max_rel_error=" << std::scientific
        << std::setprecision(3) << c.max_rel_error << std::defaultfloat << " trials=" << c.trials << '\n';
    cases.push_back({{"name", c.name},
                     {"max_rel_error", c.max_rel_error},
                     {"trials", c.trials},
                     {"coordinates", c.coordinates},
                     {"passed", ok}});
  }
  write_text(path, json{{"tolerance", gradcheck_tolerance}, {"cases", cases}, {"passed", outcome.passed}}.dump(2) + "\n");
  outcome.manifest.timings.emplace_back("total", seconds_since(start));
  write_manifest(dir, outcome.manifest);
  return outcome;
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::train: run_train(config, out, err); break;
      case Command::evaluate: run_evaluate(config, out, err); break;
      case Command::crossval: run_crossval(config, out, err); break;
      case Command::predict: run_predict(config, out, err); break;
      case Command::synthesize: run_synthesize(config, out, err); break;
      case Command::gradcheck:
        if (!run_gradcheck(config, out, err).passed) {
          err << "error: gradient check exceeded " << gradcheck_tolerance << '\n';
          return exit_validation_failed;
        }
        break;
    }
    return exit_ok;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_missing_input;
  } catch (const CorruptCheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return exit_corrupt_checkpoint;
  } catch (const HashMismatchError& e) {
    err << "error: " << e.what() << '\n';
    return exit_hash_mismatch;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return exit_bad_corpus;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation_failed;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

int main_entry(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  ParseOutcome parsed;
  try {
    parsed = parse_config(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return exit_usage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_missing_input;
  }
  if (parsed.action != ParseAction::run) {
    out << parsed.text;
    return exit_ok;
  }
  return run_command(parsed.config, out, err);
}

}  // namespace aspectforge::cli
