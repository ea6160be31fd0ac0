#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetermpc/checkpoint.hpp"
#include "hetermpc/config.hpp"
#include "hetermpc/corpus.hpp"
#include "hetermpc/metrics.hpp"
#include "hetermpc/model.hpp"
#include "hetermpc/parallel.hpp"
#include "hetermpc/trainer.hpp"

namespace hetermpc::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string corpus;
  std::string checkpoint;
  std::string out;
  std::size_t index = 0;
  bool general_addressee = false;
  bool json_only = false;
  std::vector<std::string> files;
};

RunConfig resolve(const Flags& flags) {
  RunConfig config;
  if (!flags.config.empty()) {
    if (!fs::exists(flags.config)) throw UsageError("config file not found: " + flags.config);
    config = RunConfig::load(flags.config);
  }
  if (flags.seed) config.train.seed = *flags.seed;
  if (!flags.corpus.empty()) config.corpus = flags.corpus;
  if (!flags.checkpoint.empty()) config.checkpoint = flags.checkpoint;
  if (!flags.out.empty()) config.out = flags.out;
  if (config.vocab.empty() && !config.checkpoint.empty()) config.vocab = config.checkpoint.string() + ".vocab.json";
  config.validate();
  return config;
}

void require_readable(const fs::path& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is not set");
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path.string());
}

void require_set(const fs::path& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is not set");
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::vector<TokenSeq> read_lines(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::vector<TokenSeq> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(tokenize(line));
  return lines;
}

int cmd_train(const Flags& flags, std::ostream& out) {
  const auto config = resolve(flags);
  require_readable(config.corpus, "corpus");
  if (!config.valid_corpus.empty()) require_readable(config.valid_corpus, "validation corpus");
  require_set(config.checkpoint, "checkpoint");

  const auto records = load_corpus(config.corpus);
  if (records.empty()) throw std::runtime_error("corpus " + config.corpus.string() + " has no conversations");
  const auto vocab = Vocabulary::build(records);
  const auto samples = prepare_corpus(records, vocab, config.model);
  std::vector<PreparedSample> valid;
  if (!config.valid_corpus.empty()) valid = prepare_corpus(load_corpus(config.valid_corpus), vocab, config.model);

  const fs::path log_path = !config.metrics_log.empty() ? config.metrics_log
                            : !config.out.empty()       ? config.out
                                                        : fs::path(config.checkpoint.string() + ".log.jsonl");
  ParameterSet<float> params(config.train.seed);
  const auto result = train(samples, valid, config.model, config.train, params, vocab.size(),
                            [&out](const LogEntry& e) {
                              out << "step " << e.step << " train_loss " << e.train_loss << " valid_loss "
                                  << e.valid_loss << " lr " << e.lr << "\n";
                            });

  if (config.checkpoint.has_parent_path()) fs::create_directories(config.checkpoint.parent_path());
  save_checkpoint(config.checkpoint, params,
                  {{"config", config.serialize()}, {"vocab_size", vocab.size()}, {"best_step", result.best_step}});
  vocab.save(config.vocab);
  write_file(log_path, to_jsonl(result.log));
  out << "best valid_loss " << result.best_valid_loss << " at step " << result.best_step << "\n"
      << "checkpoint " << config.checkpoint.string() << "\n";
  return kExitOk;
}

int cmd_generate(const Flags& flags, std::ostream& out) {
  const auto config = resolve(flags);
  require_readable(config.checkpoint, "checkpoint");
  require_readable(config.vocab, "vocabulary");
  require_readable(config.corpus, "corpus");
  require_set(config.out, "output");

  const auto vocab = Vocabulary::load(config.vocab);
  ParameterSet<float> params(config.train.seed);
  const HeterMPC<float> model(params, config.model, vocab.size());
  load_checkpoint(config.checkpoint, params);

  const auto records = load_corpus(config.corpus);
  std::vector<std::string> lines(records.size());
  std::vector<std::string> errors(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      lines[i] = vocab.decode(model.generate(prepare_sample(records[i], vocab, config.model)));
    } catch (const std::exception& e) {
      errors[i] = "conversation " + std::to_string(i) + ": " + e.what();
    }
  }
  std::string text;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error(errors[i]);
    text += lines[i] + "\n";
  }
  write_file(config.out, text);
  out << "wrote " << lines.size() << " responses to " << config.out.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Flags& flags, std::ostream& out) {
  if (flags.files.size() != 2) throw UsageError("evaluate expects CANDIDATES and REFERENCES files");
  for (const auto& f : flags.files) require_readable(f, "input file");
  const auto report = evaluate(read_lines(flags.files[0]), read_lines(flags.files[1]));
  const auto json = report.to_json().dump(2);
  if (!flags.out.empty()) write_file(flags.out, json + "\n");
  out << json << "\n" << report.table();
  return kExitOk;
}

int cmd_inspect_graph(const Flags& flags, std::ostream& out) {
  fs::path corpus = flags.corpus;
  if (corpus.empty() && !flags.config.empty()) corpus = resolve(flags).corpus;
  require_readable(corpus, "corpus");
  const auto records = load_corpus(corpus);
  if (flags.index >= records.size()) {
    throw UsageError("index " + std::to_string(flags.index) + " out of range; corpus has " +
                     std::to_string(records.size()) + " conversations");
  }
  auto record = records[flags.index];
  if (flags.general_addressee) record = apply_general_addressee(record);
  const auto graph = build_graph(record);
  nlohmann::json counts = nlohmann::json::object();
  const auto per_type = graph.edge_type_counts();
  for (std::size_t t = 0; t < kNumEdgeTypes; ++t) counts[std::string(to_string(kAllEdgeTypes[t]))] = per_type[t];
  const nlohmann::json dump{{"graph", graph_to_json(graph)},
                            {"summary",
                             {{"M", graph.num_utterances()},
                              {"I", graph.num_interlocutors()},
                              {"edges", graph.edges().size()},
                              {"edge_counts", counts}}}};
  if (!flags.json_only) {
    char row[64];
    out << "M " << graph.num_utterances() << "  I " << graph.num_interlocutors() << "  edges "
        << graph.edges().size() << "\n";
    std::snprintf(row, sizeof row, "%-6s %-12s %-6s\n", "src", "type", "dst");
    out << row;
    for (const auto& e : graph.edges()) {
      std::snprintf(row, sizeof row, "%-6s %-12s %-6s\n", to_string(e.source).c_str(),
                    std::string(to_string(e.type)).c_str(), to_string(e.target).c_str());
      out << row;
    }
    out << "\n";
  }
  out << dump.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  apply_thread_limit();
  CLI::App app{"Heterogeneous graph response generation for multi-party conversations", "hetermpc"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "key = value run configuration");
    cmd->add_option("--seed", flags.seed, "overrides the configured seed");
    cmd->add_option("--corpus", flags.corpus, "JSONL conversation corpus");
    cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint path");
  };
  auto* train_cmd = app.add_subcommand("train", "train a model and write the best checkpoint");
  add_common(train_cmd);
  train_cmd->add_option("--out", flags.out, "metrics log path (JSONL)");
  auto* generate_cmd = app.add_subcommand("generate", "greedy responses, one line per conversation");
  add_common(generate_cmd);
  generate_cmd->add_option("--out", flags.out, "responses file");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "BLEU-1..4 and ROUGE-L of candidates against references");
  evaluate_cmd->add_option("files", flags.files, "CANDIDATES REFERENCES")->expected(2);
  evaluate_cmd->add_option("--out", flags.out, "write the JSON report here too");
  auto* inspect_cmd = app.add_subcommand("inspect-graph", "dump the graph built for one conversation");
  inspect_cmd->add_option("--config", flags.config, "key = value run configuration");
  inspect_cmd->add_option("--corpus", flags.corpus, "JSONL conversation corpus");
  inspect_cmd->add_option("--index", flags.index, "conversation index")->default_val(0);
  inspect_cmd->add_flag("--general-addressee", flags.general_addressee,
                        "treat turns without an addressee as addressing everyone");
  inspect_cmd->add_flag("--json", flags.json_only, "print only the JSON dump");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(flags, out);
    if (generate_cmd->parsed()) return cmd_generate(flags, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(flags, out);
    return cmd_inspect_graph(flags, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace hetermpc::cli
