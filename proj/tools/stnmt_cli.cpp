#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stnmt/bleu.hpp"
#include "stnmt/checkpoint.hpp"
#include "stnmt/infer.hpp"
#include "stnmt/optim.hpp"

namespace fs = std::filesystem;
using namespace stnmt;

namespace {

// Options that take no value; a config-file entry for them is a boolean.
const std::set<std::string> kFlags{"length-norm", "two-phase", "resume"};

// Consumed before parsing by with_config; registered so --help lists it.
std::string g_config;

struct Common {
  std::string encoder;
  std::string coverage;
  std::string dims = "desk";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct PreprocessArgs {
  fs::path source, target, trees, out;
  std::size_t shortlist = kDefaultShortlist;
  std::size_t max_len = 50;
};

struct TrainArgs {
  fs::path data, model, log;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t phase_one_epochs = 0;
  double clip = 0;
  bool two_phase = false;
  bool resume = false;
};

struct DecodeArgs {
  fs::path data, model, input, trees, output, out_dir;
  std::size_t beam = 10;
  std::size_t max_len = 0;
  bool length_norm = false;
};

struct ScoreArgs {
  fs::path hyp, source;
  std::vector<fs::path> refs;
  std::size_t bin_width = 10;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string env_name(std::string key) {
  for (char& c : key) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "STNMT_" + key;
}

// Appends "key = value" entries from the file named by --config as command
// line flags, skipping anything already given on the command line or through
// the environment.
std::vector<std::string> with_config(std::vector<std::string> args) {
  fs::path config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].starts_with("--config=")) config = args[i].substr(9);
  }
  if (config.empty()) return args;
  std::ifstream in(config);
  if (!in) throw ConfigError("cannot open config file " + config.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(config.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    bool given = std::getenv(env_name(key).c_str()) != nullptr;
    for (const auto& a : args) given = given || a == flag || a.starts_with(flag + "=");
    if (given) continue;
    if (kFlags.count(key)) {
      if (value == "true" || value == "1") extra.push_back(flag);
      else if (value != "false" && value != "0") throw ConfigError("config key " + key + " expects true or false");
    } else {
      extra.push_back(flag);
      extra.push_back(value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void add_common(CLI::App* app, Common& c, bool modes) {
  app->add_option("--config", g_config, "File of key = value lines; command-line flags take precedence");
  if (modes) {
    app->add_option("--encoder", c.encoder, "Encoder: seq, tree or bidir")
        ->check(CLI::IsMember({"seq", "tree", "bidir"}))
        ->envname("STNMT_ENCODER");
    app->add_option("--coverage", c.coverage, "Coverage: none, word or tree")
        ->check(CLI::IsMember({"none", "word", "tree"}))
        ->envname("STNMT_COVERAGE");
  }
  app->add_option("--seed", c.seed, "Random seed")->envname("STNMT_SEED");
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber)->envname("STNMT_THREADS");
}

Vocabulary load_vocab(const fs::path& data, const char* name) { return Vocabulary::load(data / name); }

ModelDims dims_profile(const std::string& name) {
  if (name == "desk") return ModelDims::desk();
  if (name == "paper") return ModelDims::paper();
  throw ConfigError("unknown dims profile '" + name + "'");
}

void check_modes(const ModelConfig& config, const Common& c, const fs::path& model) {
  if (!c.encoder.empty() && parse_encoder_kind(c.encoder) != config.encoder) {
    throw ConfigError("--encoder " + c.encoder + " does not match checkpoint " + model.string() +
                      " (encoder " + to_string(config.encoder) + ")");
  }
  if (!c.coverage.empty() && parse_coverage_kind(c.coverage) != config.coverage) {
    throw ConfigError("--coverage " + c.coverage + " does not match checkpoint " + model.string() +
                      " (coverage " + to_string(config.coverage) + ")");
  }
}

// -- preprocess -------------------------------------------------------------------

int run_preprocess(const PreprocessArgs& a) {
  const bool with_trees = !a.trees.empty();
  const auto raw = read_parallel(a.source, a.target,
                                 with_trees ? std::optional<fs::path>(a.trees) : std::nullopt);
  FilterStats stats;
  const auto kept = filter_pairs(raw, {.max_len = a.max_len, .require_tree = with_trees}, stats);

  std::vector<Sentence> src, tgt;
  std::vector<std::string> src_lines, tgt_lines, tree_lines;
  for (const auto& p : kept) {
    src.push_back(p.source);
    tgt.push_back(p.target);
    src_lines.push_back(join(p.source));
    tgt_lines.push_back(join(p.target));
    if (p.tree) tree_lines.push_back(p.tree->to_bracketed());
  }
  const Vocabulary sv = Vocabulary::build(src, a.shortlist);
  const Vocabulary tv = Vocabulary::build(tgt, a.shortlist);

  fs::create_directories(a.out);
  sv.save(a.out / "src.vocab");
  tv.save(a.out / "tgt.vocab");
  write_lines(a.out / "train.src", src_lines);
  write_lines(a.out / "train.tgt", tgt_lines);
  if (with_trees) write_lines(a.out / "train.trees", tree_lines);

  char buf[256];
  std::ostringstream report;
  report << "pairs read: " << stats.input << "\n"
         << "kept: " << stats.kept << "\n"
         << "dropped-by-length: " << stats.dropped_length << "\n"
         << "dropped-by-parse: " << stats.dropped_parse << "\n"
         << "dropped-empty: " << stats.dropped_empty << "\n";
  std::snprintf(buf, sizeof buf, "source vocabulary: %zu entries, covering approximately %.1f%% of tokens\n",
                sv.size(), token_coverage(src, sv));
  report << buf;
  std::snprintf(buf, sizeof buf, "target vocabulary: %zu entries, covering approximately %.1f%% of tokens\n",
                tv.size(), token_coverage(tgt, tv));
  report << buf;
  std::ofstream(a.out / "stats.txt") << report.str();
  std::cout << report.str();
  return 0;
}

// -- train ------------------------------------------------------------------------

std::vector<TrainingExample> load_training(const fs::path& data, const Vocabulary& sv, const Vocabulary& tv,
                                           bool need_trees) {
  const bool have_trees = fs::exists(data / "train.trees");
  if (need_trees && !have_trees) {
    throw ConfigError("tree encoders need parse trees but " + (data / "train.trees").string() + " is missing");
  }
  const auto raw = read_parallel(data / "train.src", data / "train.tgt",
                                 need_trees ? std::optional<fs::path>(data / "train.trees") : std::nullopt);
  FilterStats stats;
  const auto pairs = filter_pairs(raw, {.max_len = std::size_t(-1), .require_tree = need_trees}, stats);
  if (pairs.size() != raw.size()) {
    throw ConfigError(data.string() + " holds pairs preprocess would drop; rerun preprocess");
  }
  std::vector<TrainingExample> out;
  for (const auto& p : pairs) out.push_back(make_example(p, sv, tv));
  return out;
}

int run_train(const TrainArgs& a, const Common& c) {
  if (a.model.empty()) throw ConfigError("train needs --model");
  const Vocabulary sv = load_vocab(a.data, "src.vocab");
  const Vocabulary tv = load_vocab(a.data, "tgt.vocab");

  ModelConfig config;
  std::optional<Model> resumed;
  if (a.resume) {
    resumed.emplace(load_checkpoint(a.model));
    check_modes(resumed->config(), c, a.model);
    config = resumed->config();
    if (config.source_vocab != sv.size() || config.target_vocab != tv.size()) {
      throw ConfigError("checkpoint " + a.model.string() + " vocabulary sizes differ from " + a.data.string());
    }
  } else {
    config.encoder = parse_encoder_kind(c.encoder.empty() ? "seq" : c.encoder);
    config.coverage = parse_coverage_kind(c.coverage.empty() ? "none" : c.coverage);
    config.dims = dims_profile(c.dims);
    config.source_vocab = sv.size();
    config.target_vocab = tv.size();
    config.validate();
  }
  const auto examples = load_training(a.data, sv, tv, config.uses_tree());

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw ConfigError("cannot write log " + a.log.string());
  }
  std::ostream& log = a.log.empty() ? std::cout : log_file;
  const auto logger = [&](const char* phase) {
    return [&log, phase](const EpochLog& e, const Model&) {
      log << nlohmann::json{{"phase", phase}, {"epoch", e.epoch}, {"loss", e.mean_loss}}.dump() << "\n";
      log.flush();
      std::fprintf(stderr, "%s epoch %zu loss %.4f (%.2fs)\n", phase, e.epoch, e.mean_loss, e.wall_seconds);
      return true;
    };
  };

  TrainConfig tc;
  tc.batch_size = a.batch_size;
  tc.epochs = a.epochs;
  tc.seed = c.seed;
  tc.threads = c.threads;
  tc.clip_norm = a.clip;
  tc.checkpoint = a.model;

  if (a.two_phase) {
    if (a.resume) throw ConfigError("--two-phase cannot resume");
    TrainConfig first = tc;
    first.epochs = a.phase_one_epochs ? a.phase_one_epochs : a.epochs;
    first.checkpoint = a.model.string() + ".phase1";
    first.on_epoch = logger("phase1");
    tc.on_epoch = logger("phase2");
    const TwoPhaseResult r = train_two_phase(examples, config, c.seed, first, tc);
    save_checkpoint(a.model, r.model);
    return 0;
  }
  Model model = resumed ? std::move(*resumed) : Model(config, c.seed);
  tc.on_epoch = logger("train");
  train(model, examples, tc);
  save_checkpoint(a.model, model);
  return 0;
}

// -- translate / attention ------------------------------------------------------------

struct SourceSet {
  std::vector<Sentence> words;
  std::vector<TrainingExample> examples;
};

SourceSet load_sources(const DecodeArgs& a, const Vocabulary& sv, bool need_trees) {
  if (a.input.empty()) throw ConfigError("--input is required");
  if (need_trees && a.trees.empty()) throw ConfigError("this model reads parse trees; pass --trees");
  const auto lines = read_lines(a.input);
  std::vector<std::string> tree_lines;
  if (need_trees) {
    tree_lines = read_lines(a.trees);
    if (tree_lines.size() != lines.size()) {
      throw ConfigError("line counts differ: " + a.input.string() + " has " + std::to_string(lines.size()) +
                        ", " + a.trees.string() + " has " + std::to_string(tree_lines.size()));
    }
  }
  SourceSet s;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Sentence words = tokenize(lines[i]);
    if (words.empty()) throw ConfigError(a.input.string() + ":" + std::to_string(i + 1) + ": empty sentence");
    TrainingExample ex;
    ex.source = sv.encode(words);
    if (need_trees) {
      try {
        ex.tree = read_binary_tree(tree_lines[i], words);
      } catch (const std::exception& e) {
        throw ConfigError(a.trees.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    s.words.push_back(std::move(words));
    s.examples.push_back(std::move(ex));
  }
  return s;
}

struct Loaded {
  Model model;
  Vocabulary sv, tv;
};

Loaded load_model(const DecodeArgs& a, const Common& c) {
  if (a.model.empty()) throw ConfigError("--model is required");
  Model model = load_checkpoint(a.model);
  check_modes(model.config(), c, a.model);
  Vocabulary sv = load_vocab(a.data, "src.vocab");
  Vocabulary tv = load_vocab(a.data, "tgt.vocab");
  if (model.config().source_vocab != sv.size() || model.config().target_vocab != tv.size()) {
    throw ConfigError("checkpoint " + a.model.string() + " vocabulary sizes differ from " + a.data.string());
  }
  return {std::move(model), std::move(sv), std::move(tv)};
}

int run_translate(const DecodeArgs& a, const Common& c) {
  const Loaded l = load_model(a, c);
  const SourceSet src = load_sources(a, l.sv, l.model.config().uses_tree());
  const auto hyps = decode_corpus(
      l.model, src.examples, {.beam = a.beam, .max_len = a.max_len, .length_norm = a.length_norm}, c.threads);
  std::vector<std::string> out;
  for (const auto& h : hyps) out.push_back(join(l.tv.decode(h.tokens)));
  if (a.output.empty()) {
    for (const auto& line : out) std::cout << line << "\n";
  } else {
    write_lines(a.output, out);
  }
  return 0;
}

int run_attention(const DecodeArgs& a, const Common& c) {
  if (a.out_dir.empty()) throw ConfigError("attention needs --out-dir");
  const Loaded l = load_model(a, c);
  const SourceSet src = load_sources(a, l.sv, l.model.config().uses_tree());
  const auto hyps = decode_corpus(
      l.model, src.examples, {.beam = a.beam, .max_len = a.max_len, .length_norm = a.length_norm}, c.threads);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    std::vector<std::string> target;
    for (int t : hyps[i].tokens) target.push_back(l.tv.word(t));
    std::ofstream out(a.out_dir / (std::to_string(i + 1) + ".att.csv"));
    out << export_attention(hyps[i].trace, target, src.words[i]);
    if (!out) throw ConfigError("cannot write attention files in " + a.out_dir.string());
  }
  return 0;
}

// -- score ------------------------------------------------------------------------

std::vector<Sentence> read_sentences(const fs::path& path) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line));
  return out;
}

int run_score(const ScoreArgs& a) {
  const auto hyps = read_sentences(a.hyp);
  std::vector<std::vector<Sentence>> refs(hyps.size());
  for (const auto& path : a.refs) {
    const auto r = read_sentences(path);
    if (r.size() != hyps.size()) {
      throw ConfigError("line counts differ: " + a.hyp.string() + " has " + std::to_string(hyps.size()) + ", " +
                        path.string() + " has " + std::to_string(r.size()));
    }
    for (std::size_t i = 0; i < r.size(); ++i) refs[i].push_back(r[i]);
  }
  std::cout << corpus_bleu(hyps, refs).report() << "\n";
  if (!a.source.empty()) {
    const auto src = read_sentences(a.source);
    if (src.size() != hyps.size()) throw ConfigError("--source line count differs from --hyp");
    if (a.refs.size() != 1) throw ConfigError("length bins use exactly one reference");
    std::vector<std::size_t> lengths;
    std::vector<Sentence> single;
    for (std::size_t i = 0; i < src.size(); ++i) {
      lengths.push_back(src[i].size());
      single.push_back(refs[i][0]);
    }
    char buf[96];
    for (const auto& bin : length_bin_report(lengths, hyps, single, a.bin_width)) {
      std::snprintf(buf, sizeof buf, "%-9s %6zu  %6.2f\n", bin.label().c_str(), bin.count, bin.score.bleu);
      std::cout << buf;
    }
  }
  return 0;
}

void add_decode(CLI::App* app, DecodeArgs& d) {
  app->add_option("--model", d.model, "Checkpoint file")->required();
  app->add_option("--data", d.data, "Directory with src.vocab and tgt.vocab")->required();
  app->add_option("--input", d.input, "Source sentences, one per line")->required();
  app->add_option("--trees", d.trees, "Parse trees aligned with --input");
  app->add_option("--beam", d.beam, "Beam width; 1 is greedy")->check(CLI::PositiveNumber)->envname("STNMT_BEAM");
  app->add_option("--max-len", d.max_len, "Output length cap; 0 means 2 * source length + 5");
  app->add_flag("--length-norm", d.length_norm, "Rank finished hypotheses by mean log probability");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syntax-aware neural machine translation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stnmt 0.1");

  Common common;
  PreprocessArgs pre;
  TrainArgs tr;
  DecodeArgs dec;
  ScoreArgs sc;

  auto* p = app.add_subcommand("preprocess", "Filter a parallel corpus and build vocabularies");
  p->add_option("--source", pre.source, "Source sentences")->required()->check(CLI::ExistingFile);
  p->add_option("--target", pre.target, "Target sentences")->required()->check(CLI::ExistingFile);
  p->add_option("--trees", pre.trees, "Source parse trees, one per line")->check(CLI::ExistingFile);
  p->add_option("--out", pre.out, "Output directory")->required();
  p->add_option("--shortlist", pre.shortlist, "Vocabulary shortlist size")->envname("STNMT_SHORTLIST");
  p->add_option("--max-len", pre.max_len, "Drop pairs with a side longer than this");
  p->add_option("--config", g_config, "File of key = value lines; command-line flags take precedence");

  auto* t = app.add_subcommand("train", "Train a model");
  add_common(t, common, true);
  t->add_option("--data", tr.data, "Preprocessed directory")->required();
  t->add_option("--model", tr.model, "Checkpoint to write")->required();
  t->add_option("--dims", common.dims, "Dimension profile")->check(CLI::IsMember({"desk", "paper"}))
      ->envname("STNMT_DIMS");
  t->add_option("--batch-size", tr.batch_size, "Sentences per batch")->check(CLI::PositiveNumber)
      ->envname("STNMT_BATCH_SIZE");
  t->add_option("--epochs", tr.epochs, "Training epochs")->envname("STNMT_EPOCHS");
  t->add_option("--clip", tr.clip, "Global gradient norm clip; 0 disables");
  t->add_option("--log", tr.log, "JSON-lines training log (default stdout)");
  t->add_flag("--two-phase", tr.two_phase, "Train bottom-up first, then the bidirectional model");
  t->add_option("--phase-one-epochs", tr.phase_one_epochs, "Epochs for the first phase (default --epochs)");
  t->add_flag("--resume", tr.resume, "Continue from the checkpoint at --model");

  auto* tl = app.add_subcommand("translate", "Decode source sentences");
  add_common(tl, common, true);
  add_decode(tl, dec);
  tl->add_option("--output", dec.output, "Output file (default stdout)");

  auto* at = app.add_subcommand("attention", "Write one attention CSV per sentence");
  add_common(at, common, true);
  add_decode(at, dec);
  at->add_option("--out-dir", dec.out_dir, "Directory for <n>.att.csv files")->required();

  auto* s = app.add_subcommand("score", "Corpus BLEU and length-binned scores");
  s->add_option("--hyp", sc.hyp, "Hypotheses")->required()->check(CLI::ExistingFile);
  s->add_option("--ref", sc.refs, "Reference file; repeat for more references")->required()
      ->check(CLI::ExistingFile);
  s->add_option("--source", sc.source, "Source file; prints BLEU per source-length bin")->check(CLI::ExistingFile);
  s->add_option("--bin-width", sc.bin_width, "Length bin width")->check(CLI::PositiveNumber);
  s->add_option("--config", g_config, "File of key = value lines; command-line flags take precedence");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = with_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "stnmt: error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*p) return run_preprocess(pre);
    if (*t) return run_train(tr, common);
    if (*tl) return run_translate(dec, common);
    if (*at) return run_attention(dec, common);
    if (*s) return run_score(sc);
  } catch (const std::exception& e) {
    std::cerr << "stnmt: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
