#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stnmt/bleu.hpp"
#include "stnmt/checkpoint.hpp"
#include "stnmt/infer.hpp"
#include "stnmt/optim.hpp"
#include "stnmt/synthetic.hpp"

namespace py = pybind11;
using namespace stnmt;

namespace {

std::vector<Sentence> split_all(const std::vector<std::string>& lines) {
  std::vector<Sentence> out;
  for (const auto& l : lines) out.push_back(tokenize(l));
  return out;
}

ModelDims profile(const std::string& name) {
  if (name == "desk") return ModelDims::desk();
  if (name == "paper") return ModelDims::paper();
  throw ConfigError("unknown dims profile '" + name + "'");
}

TrainingExample example(std::vector<int> source, std::vector<int> target, std::optional<std::string> tree) {
  TrainingExample ex;
  ex.source = std::move(source);
  ex.target = std::move(target);
  if (ex.target.empty() || ex.target.back() != kEos) ex.target.push_back(kEos);
  if (tree) ex.tree = read_binary_tree(*tree, synthetic_words(ex.source));
  return ex;
}

const BinaryTree* tree_of(const TrainingExample& ex) { return ex.tree ? &*ex.tree : nullptr; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Syntax-aware neural machine translation";
  m.attr("PAD") = kPad;
  m.attr("EOS") = kEos;
  m.attr("UNK") = kUnk;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<AlignmentError>(m, "AlignmentError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::class_<BinaryTree>(m, "BinaryTree")
      .def_property_readonly("leaf_count", &BinaryTree::leaf_count)
      .def_property_readonly("node_count", &BinaryTree::node_count)
      .def_property_readonly("root", &BinaryTree::root)
      .def_property_readonly("words", &BinaryTree::words)
      .def("left", &BinaryTree::left)
      .def("right", &BinaryTree::right)
      .def("parent", &BinaryTree::parent)
      .def("to_bracketed", &BinaryTree::to_bracketed)
      .def("__repr__", [](const BinaryTree& t) { return "<BinaryTree " + t.to_bracketed() + ">"; });

  m.def(
      "read_tree", [](const std::string& text, const std::string& sentence) {
        const Sentence words = tokenize(sentence);
        return read_binary_tree(text, words);
      },
      py::arg("text"), py::arg("sentence"), "Parse, binarize and index a bracketed tree for a sentence");

  py::class_<BleuScore>(m, "BleuScore")
      .def_readonly("bleu", &BleuScore::bleu)
      .def_readonly("precision", &BleuScore::precision)
      .def_readonly("brevity_penalty", &BleuScore::brevity_penalty)
      .def_readonly("ratio", &BleuScore::ratio)
      .def_readonly("hyp_len", &BleuScore::hyp_len)
      .def_readonly("ref_len", &BleuScore::ref_len)
      .def("report", &BleuScore::report)
      .def("__repr__", &BleuScore::report);

  m.def(
      "bleu",
      [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
        return corpus_bleu(split_all(hyps), split_all(refs));
      },
      py::arg("hypotheses"), py::arg("references"), "Case-insensitive corpus BLEU-4 against one reference");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static(
          "build", [](const std::vector<std::string>& lines, std::size_t shortlist) {
            return Vocabulary::build(split_all(lines), shortlist);
          },
          py::arg("lines"), py::arg("shortlist") = kDefaultShortlist)
      .def_static("load", &Vocabulary::load)
      .def("save", &Vocabulary::save)
      .def("__len__", &Vocabulary::size)
      .def("id", &Vocabulary::id)
      .def("word", &Vocabulary::word)
      .def("encode", [](const Vocabulary& v, const std::string& line) { return v.encode(tokenize(line)); })
      .def("decode", [](const Vocabulary& v, const std::vector<int>& ids) { return join(v.decode(ids)); });

  py::class_<TrainingExample>(m, "Example")
      .def(py::init(&example), py::arg("source"), py::arg("target"), py::arg("tree") = py::none(),
           "Source and target ids; the tree is bracketed over words w<id>")
      .def_readonly("source", &TrainingExample::source)
      .def_readonly("target", &TrainingExample::target)
      .def_readonly("tree", &TrainingExample::tree);

  py::class_<SyntheticTask>(m, "SyntheticTask")
      .def_readonly("examples", &SyntheticTask::examples)
      .def_readonly("source_vocab", &SyntheticTask::source_vocab)
      .def_readonly("target_vocab", &SyntheticTask::target_vocab);
  m.def("copy_task", &copy_task, py::arg("pairs") = 200, py::arg("min_len") = 3, py::arg("max_len") = 8,
        py::arg("vocab") = 20, py::arg("seed") = 7);
  m.def("bracket_task", &bracket_task, py::arg("sequences") = 100, py::arg("min_len") = 4,
        py::arg("max_len") = 6, py::arg("vocab") = 10, py::arg("seed") = 11);

  py::class_<Hypothesis>(m, "Hypothesis")
      .def_readonly("tokens", &Hypothesis::tokens)
      .def_readonly("log_prob", &Hypothesis::log_prob)
      .def_property_readonly("attention", [](const Hypothesis& h) { return h.trace.rows; })
      .def_property_readonly("nodes", [](const Hypothesis& h) { return h.trace.nodes; })
      .def_property_readonly("finished", &Hypothesis::finished);

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& encoder, const std::string& coverage, std::size_t source_vocab,
                       std::size_t target_vocab, const std::string& dims, std::uint64_t seed) {
             ModelConfig c;
             c.encoder = parse_encoder_kind(encoder);
             c.coverage = parse_coverage_kind(coverage);
             c.dims = profile(dims);
             c.source_vocab = source_vocab;
             c.target_vocab = target_vocab;
             return Model(c, seed);
           }),
           py::arg("encoder"), py::arg("coverage"), py::arg("source_vocab"), py::arg("target_vocab"),
           py::arg("dims") = "desk", py::arg("seed") = 1)
      .def_static("load", &load_checkpoint)
      .def("save", [](const Model& self, const std::filesystem::path& p) { save_checkpoint(p, self); })
      .def_property_readonly("encoder", [](const Model& self) { return to_string(self.config().encoder); })
      .def_property_readonly("coverage", [](const Model& self) { return to_string(self.config().coverage); })
      .def_property_readonly("parameter_count", [](const Model& self) { return self.params().element_count(); })
      .def_property_readonly("seed", &Model::seed)
      .def(
          "train",
          [](Model& self, const std::vector<TrainingExample>& examples, std::size_t epochs, std::size_t batch_size,
             std::uint64_t seed, std::size_t threads) {
            TrainConfig tc;
            tc.epochs = epochs;
            tc.batch_size = batch_size;
            tc.seed = seed;
            tc.threads = threads;
            TrainResult r;
            {
              py::gil_scoped_release release;
              r = train(self, examples, tc);
            }
            std::vector<double> losses;
            for (const auto& e : r.epochs) losses.push_back(e.mean_loss);
            return losses;
          },
          py::arg("examples"), py::arg("epochs") = 10, py::arg("batch_size") = 32, py::arg("seed") = 1,
          py::arg("threads") = 1, "Adadelta training; returns the mean per-token loss of each epoch")
      .def(
          "loss",
          [](const Model& self, const TrainingExample& ex) {
            Tape tape = Tape::inference();
            return static_cast<double>(sentence_loss(tape, ex, self).item());
          },
          "Mean per-token negative log likelihood under teacher forcing")
      .def(
          "decode",
          [](const Model& self, const TrainingExample& ex, std::size_t beam, std::size_t max_len,
             bool length_norm) {
            py::gil_scoped_release release;
            if (beam == 1) return greedy_decode(self, ex.source, tree_of(ex), max_len);
            return beam_decode(self, ex.source, tree_of(ex),
                               {.beam = beam, .max_len = max_len, .length_norm = length_norm});
          },
          py::arg("example"), py::arg("beam") = 10, py::arg("max_len") = 0, py::arg("length_norm") = false);

  m.def(
      "attention_csv",
      [](const Hypothesis& h, const std::vector<std::string>& target, const std::vector<std::string>& source) {
        return export_attention(h.trace, target, source);
      },
      py::arg("hypothesis"), py::arg("target_words"), py::arg("source_words"));
}
