// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/cli/config.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace aspectforge::cli {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 6> command_names = {{
    {Command::train, "train"},
    {Command::evaluate, "evaluate"},
    {Command::predict, "predict"},
    {Command::crossval, "crossval"},
    {Command::synthesize, "synthesize"},
    {Command::gradcheck, "gradcheck"},
}};

enum class Kind { integer, seed, real, boolean, text, arch, text_list, format, command };

std::string type_name(Kind kind) {
  switch (kind) {
    case Kind::integer:
    case Kind::seed: return "INT";
    case Kind::real: return "REAL";
    case Kind::boolean: return "on|off";
    case Kind::arch: return "NAME";
    case Kind::format: return "table|json";
    default: return "TEXT";
  }
}

constexpr std::array<std::string_view, 6> command_help = {
    "train each architecture and write checkpoints",
    "train and score on a held-out split (or score a checkpoint)",
    "label texts with a trained checkpoint",
    "k-fold cross-validation",
    "write a keyword-separable synthetic corpus",
    "finite-difference check of every layer and architecture",
};

struct Key {
  std::string_view name;
  Kind kind;
  std::string_view help;
};

// Every config key; the flag is "--" + name with '_' replaced by '-'.
constexpr std::array<Key, 34> keys = {{
    {"command", Kind::command, ""},
    {"corpus", Kind::text, "training corpus (JSONL)"},
    {"test_corpus", Kind::text, "held-out corpus for evaluate"},
    {"test_fraction", Kind::real, "held-out share when no test corpus is given"},
    {"arch", Kind::arch, "cnn|lstm|bilstm|gru|all"},
    {"embedding_dim", Kind::integer, "embedding size"},
    {"maxlen", Kind::integer, "tokens per review after padding/truncation"},
    {"hidden_units", Kind::integer, "recurrent units"},
    {"filters", Kind::integer, "convolution filters"},
    {"kernel_size", Kind::integer, "convolution width"},
    {"dropout", Kind::real, "dropout rate"},
    {"batchnorm", Kind::boolean, "on|off"},
    {"epochs", Kind::integer, "training epochs"},
    {"batch_size", Kind::integer, "mini-batch size"},
    {"learning_rate", Kind::real, "Nadam learning rate"},
    {"clip_epsilon", Kind::real, "probability clamp in the loss"},
    {"max_words", Kind::integer, "vocabulary cap including <pad> and <oov>"},
    {"threshold", Kind::real, "decision threshold"},
    {"cpt", Kind::boolean, "on|off"},
    {"cpt_margin", Kind::real, "minimum advantage to keep a polarity"},
    {"beta", Kind::real, "F-beta weight"},
    {"k", Kind::integer, "cross-validation folds"},
    {"runs", Kind::integer, "repetitions"},
    {"seed", Kind::seed, "base seed"},
    {"out", Kind::text, "output directory"},
    {"format", Kind::format, "table|json report on stdout"},
    {"lenient", Kind::boolean, "drop conflicting gold labels instead of failing"},
    {"allow_unlabeled", Kind::boolean, "accept reviews without gold labels"},
    {"checkpoint", Kind::text, "model checkpoint"},
    {"input", Kind::text, "file with one review per line"},
    {"text", Kind::text_list, "review text (repeatable)"},
    {"aspects", Kind::integer, "synthetic aspect count"},
    {"examples", Kind::integer, "synthetic review count"},
    {"vocab_size", Kind::integer, "synthetic vocabulary size"},
}};

const Key* find_key(std::string_view name) {
  for (const auto& k : keys)
    if (k.name == name) return &k;
  return nullptr;
}

std::string flag_of(std::string_view name) {
  std::string out = "--" + std::string(name);
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view expected, const json& got) {
  throw UsageError("config key '" + std::string(key) + "': expected " + std::string(expected) + ", got " + got.dump());
}

std::int64_t get_int(std::string_view key, const json& v) {
  if (!v.is_number_integer()) bad_value(key, "an integer", v);
  return v.get<std::int64_t>();
}

int get_int32(std::string_view key, const json& v) {
  const auto x = get_int(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad_value(key, "a 32-bit integer", v);
  return static_cast<int>(x);
}

double get_real(std::string_view key, const json& v) {
  if (!v.is_number()) bad_value(key, "a number", v);
  return v.get<double>();
}

bool get_bool(std::string_view key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "on" || s == "true") return true;
    if (s == "off" || s == "false") return false;
  }
  bad_value(key, "on|off", v);
}

std::string get_text(std::string_view key, const json& v) {
  if (!v.is_string()) bad_value(key, "a string", v);
  return v.get<std::string>();
}

std::vector<ArchitectureKind> parse_arch_value(std::string_view key, const json& v) {
  std::vector<std::string> names;
  if (v.is_string()) {
    names.push_back(v.get<std::string>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) names.push_back(get_text(key, e));
  } else {
    bad_value(key, "an architecture name or list", v);
  }
  std::vector<ArchitectureKind> out;
  for (const auto& name : names) {
    if (name == "all") {
      out.assign(all_architectures.begin(), all_architectures.end());
      continue;
    }
    try {
      const auto kind = parse_architecture(name);
      if (std::find(out.begin(), out.end(), kind) == out.end()) out.push_back(kind);
    } catch (const ValidationError&) {
      throw UsageError("unknown architecture '" + name + "'; expected one of {cnn, lstm, bilstm, gru} or all");
    }
  }
  return out;
}

void apply_key(RunConfig& c, const std::string& key, const json& v) {
  using Setter = std::function<void(RunConfig&, const json&)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"command", [](RunConfig& c, const json& v) { c.command = parse_command(get_text("command", v)); }},
      {"corpus", [](RunConfig& c, const json& v) { c.corpus = get_text("corpus", v); }},
      {"test_corpus", [](RunConfig& c, const json& v) { c.test_corpus = get_text("test_corpus", v); }},
      {"test_fraction", [](RunConfig& c, const json& v) { c.test_fraction = get_real("test_fraction", v); }},
      {"arch", [](RunConfig& c, const json& v) { c.architectures = parse_arch_value("arch", v); }},
      {"embedding_dim", [](RunConfig& c, const json& v) { c.model.embedding_dim = get_int32("embedding_dim", v); }},
      {"maxlen", [](RunConfig& c, const json& v) { c.model.maxlen = get_int32("maxlen", v); }},
      {"hidden_units", [](RunConfig& c, const json& v) { c.model.hidden_units = get_int32("hidden_units", v); }},
      {"filters", [](RunConfig& c, const json& v) { c.model.conv_filters = get_int32("filters", v); }},
      {"kernel_size", [](RunConfig& c, const json& v) { c.model.kernel_size = get_int32("kernel_size", v); }},
      {"dropout", [](RunConfig& c, const json& v) { c.model.dropout_rate = get_real("dropout", v); }},
      {"batchnorm", [](RunConfig& c, const json& v) { c.model.batchnorm_enabled = get_bool("batchnorm", v); }},
      {"epochs", [](RunConfig& c, const json& v) { c.train.epochs = get_int32("epochs", v); }},
      {"batch_size", [](RunConfig& c, const json& v) { c.train.batch_size = get_int32("batch_size", v); }},
      {"learning_rate", [](RunConfig& c, const json& v) { c.train.learning_rate = get_real("learning_rate", v); }},
      {"clip_epsilon", [](RunConfig& c, const json& v) { c.train.clip_epsilon = get_real("clip_epsilon", v); }},
      {"max_words",
       [](RunConfig& c, const json& v) {
         c.max_words = v.is_null() ? std::nullopt : std::optional<int>(get_int32("max_words", v));
       }},
      {"threshold", [](RunConfig& c, const json& v) { c.threshold = get_real("threshold", v); }},
      {"cpt", [](RunConfig& c, const json& v) { c.cpt = get_bool("cpt", v); }},
      {"cpt_margin", [](RunConfig& c, const json& v) { c.cpt_margin = get_real("cpt_margin", v); }},
      {"beta", [](RunConfig& c, const json& v) { c.beta = get_real("beta", v); }},
      {"k", [](RunConfig& c, const json& v) { c.k = get_int32("k", v); }},
      {"runs",
       [](RunConfig& c, const json& v) {
         c.runs = v.is_null() ? std::nullopt : std::optional<int>(get_int32("runs", v));
       }},
      {"seed",
       [](RunConfig& c, const json& v) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
           bad_value("seed", "a non-negative integer", v);
         c.seed = v.get<std::uint64_t>();
       }},
      {"out", [](RunConfig& c, const json& v) { c.out = get_text("out", v); }},
      {"format",
       [](RunConfig& c, const json& v) {
         const auto s = get_text("format", v);
         if (s == "table") c.format = ReportFormat::table;
         else if (s == "json") c.format = ReportFormat::json;
         else bad_value("format", "table|json", v);
       }},
      {"lenient", [](RunConfig& c, const json& v) { c.lenient = get_bool("lenient", v); }},
      {"allow_unlabeled", [](RunConfig& c, const json& v) { c.allow_unlabeled = get_bool("allow_unlabeled", v); }},
      {"checkpoint", [](RunConfig& c, const json& v) { c.checkpoint = get_text("checkpoint", v); }},
      {"input", [](RunConfig& c, const json& v) { c.input = get_text("input", v); }},
      {"text",
       [](RunConfig& c, const json& v) {
         if (!v.is_array()) bad_value("text", "a list of strings", v);
         c.texts.clear();
         for (const auto& e : v) c.texts.push_back(get_text("text", e));
       }},
      {"aspects", [](RunConfig& c, const json& v) { c.aspects = get_int32("aspects", v); }},
      {"examples", [](RunConfig& c, const json& v) { c.examples = get_int32("examples", v); }},
      {"vocab_size", [](RunConfig& c, const json& v) { c.vocab_size = get_int32("vocab_size", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(c, v);
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Command-line strings become typed JSON so both sources share one path.
json cli_value(const Key& key, const std::string& raw) {
  const std::string flag = flag_of(key.name);
  switch (key.kind) {
    case Kind::integer: {
      std::int64_t v = 0;
      if (!parse_number(raw, v)) throw UsageError(flag + ": expected an integer, got '" + raw + "'");
      return v;
    }
    case Kind::seed: {
      std::uint64_t v = 0;
      if (!parse_number(raw, v)) throw UsageError(flag + ": expected a non-negative integer, got '" + raw + "'");
      return v;
    }
    case Kind::real: {
      double v = 0;
      if (!parse_number(raw, v) || !std::isfinite(v)) throw UsageError(flag + ": expected a number, got '" + raw + "'");
      return v;
    }
    case Kind::boolean:
      if (raw == "on" || raw == "true") return true;
      if (raw == "off" || raw == "false") return false;
      throw UsageError(flag + ": expected on|off, got '" + raw + "'");
    default:
      return raw;
  }
}

}  // namespace

std::string_view to_string(Command command) {
  for (const auto& [c, name] : command_names)
    if (c == command) return name;
  return "?";
}

Command parse_command(std::string_view name) {
  for (const auto& [c, n] : command_names)
    if (n == name) return c;
  throw UsageError("unknown command '" + std::string(name) +
                   "'; expected one of {train, evaluate, predict, crossval, synthesize, gradcheck}");
}

int RunConfig::effective_runs() const {
  if (runs) return *runs;
  return command == Command::evaluate ? 5 : 1;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw UsageError(what); };
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("--test-fraction must be in (0, 1)");
  if (architectures.empty()) fail("--arch: at least one architecture is required");
  if (!(threshold > 0.0 && threshold <= 1.0)) fail("--threshold must be in (0, 1]");
  if (!(cpt_margin >= 0.0 && cpt_margin < 1.0)) fail("--cpt-margin must be in [0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("--beta must be positive");
  if (k < 2) fail("--k must be at least 2");
  if (runs && *runs < 1) fail("--runs must be at least 1");
  if (max_words && *max_words < 3) fail("--max-words must be at least 3");
  if (aspects < 1) fail("--aspects must be at least 1");
  if (examples < 1) fail("--examples must be at least 1");
  if (out.empty()) fail("--out must not be empty");
  try {
    model.validate();
    train.validate();
  } catch (const ValidationError& e) {
    fail(e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json arch = json::array();
  for (const auto kind : c.architectures) arch.push_back(std::string(to_string(kind)));
  json j{
      {"command", std::string(to_string(c.command))},
      {"corpus", c.corpus},
      {"test_corpus", c.test_corpus},
      {"test_fraction", c.test_fraction},
      {"arch", arch},
      {"embedding_dim", c.model.embedding_dim},
      {"maxlen", c.model.maxlen},
      {"hidden_units", c.model.hidden_units},
      {"filters", c.model.conv_filters},
      {"kernel_size", c.model.kernel_size},
      {"dropout", c.model.dropout_rate},
      {"batchnorm", c.model.batchnorm_enabled},
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"learning_rate", c.train.learning_rate},
      {"clip_epsilon", c.train.clip_epsilon},
      {"max_words", c.max_words ? json(*c.max_words) : json(nullptr)},
      {"threshold", c.threshold},
      {"cpt", c.cpt},
      {"cpt_margin", c.cpt_margin},
      {"beta", c.beta},
      {"k", c.k},
      {"runs", c.runs ? json(*c.runs) : json(nullptr)},
      {"seed", c.seed},
      {"out", c.out},
      {"format", c.format == ReportFormat::json ? "json" : "table"},
      {"lenient", c.lenient},
      {"allow_unlabeled", c.allow_unlabeled},
      {"checkpoint", c.checkpoint},
      {"input", c.input},
      {"text", c.texts},
      {"aspects", c.aspects},
      {"examples", c.examples},
      {"vocab_size", c.vocab_size},
  };
  return j;
}

RunConfig config_from_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  const json& body = j.contains("manifest_version") ? j.at("config") : j;
  if (!body.is_object()) throw UsageError("manifest config must be a JSON object");
  for (const auto& [key, value] : body.items()) apply_key(base, key, value);
  return base;
}

ParseOutcome parse_config(std::span<const std::string> args) {
  CLI::App app{"Joint aspect category and polarity classification", "aspectforge"};
  app.set_help_all_flag("--help-all", "Expand all help");
  app.require_subcommand(0, 1);

  std::map<std::string, std::string> raw;
  std::vector<std::string> text_values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  bool print_config = false;
  bool lenient = false;
  bool allow_unlabeled = false;

  app.add_option("--config", config_path, "JSON config file or run manifest");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");
  for (const auto& key : keys) {
    if (key.kind == Kind::command) continue;
    const std::string name(key.name);
    std::string flag = flag_of(key.name);
    if (key.name == "arch") flag += ",--architecture";
    if (key.name == "lenient") {
      options[name] = app.add_flag(flag, lenient, std::string(key.help));
    } else if (key.name == "allow_unlabeled") {
      options[name] = app.add_flag(flag, allow_unlabeled, std::string(key.help));
    } else if (key.kind == Kind::text_list) {
      options[name] = app.add_option(flag, text_values, std::string(key.help))->type_name("TEXT");
    } else {
      options[name] = app.add_option(flag, raw[name], std::string(key.help))->type_name(type_name(key.kind));
    }
  }
  options["test_corpus"]->excludes(options["test_fraction"]);
  options["input"]->excludes(options["text"]);

  std::vector<CLI::App*> subcommands;
  for (std::size_t i = 0; i < command_names.size(); ++i) {
    auto* sub = app.add_subcommand(std::string(command_names[i].second), std::string(command_help[i]));
    sub->fallthrough();
    subcommands.push_back(sub);
  }

  ParseOutcome outcome;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    outcome.action = ParseAction::help;
    outcome.text = app.help();
    return outcome;
  } catch (const CLI::CallForAllHelp&) {
    outcome.action = ParseAction::help;
    outcome.text = app.help("", CLI::AppFormatMode::All);
    return outcome;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig config;
  bool command_given = false;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + config_path);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + config_path + " is not valid JSON: " + e.what());
    }
    config = config_from_json(file, config);
    command_given = (file.contains("manifest_version") ? file.at("config") : file).contains("command");
  }

  json overrides = json::object();
  for (const auto& [name, opt] : options) {
    if (opt->count() == 0) continue;
    const Key* key = find_key(name);
    if (key->name == "lenient") overrides[name] = lenient;
    else if (key->name == "allow_unlabeled") overrides[name] = allow_unlabeled;
    else if (key->kind == Kind::text_list) overrides[name] = text_values;
    else overrides[name] = cli_value(*key, raw[name]);
  }
  for (std::size_t i = 0; i < subcommands.size(); ++i)
    if (subcommands[i]->parsed()) {
      overrides["command"] = std::string(command_names[i].second);
      command_given = true;
    }
  if (!command_given)
    throw UsageError("no command given; expected one of {train, evaluate, predict, crossval, synthesize, gradcheck}");
  config = config_from_json(overrides, config);
  config.validate();

  outcome.config = config;
  if (print_config) {
    outcome.action = ParseAction::print_config;
    outcome.text = config_to_json(config).dump(2) + "\n";
  }
  return outcome;
}

ParseOutcome parse_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_config(args);
}

}  // namespace aspectforge::cli
