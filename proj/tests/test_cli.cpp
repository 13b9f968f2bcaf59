#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "stnmt/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace stnmt;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("stnmt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    spit(dir / "s.txt", "x1 x2 x3 x4 x5 x6\nx2 x3 x1\nx4 x4 x5 x6\n");
    spit(dir / "t.txt", "y1 y2 y3 y4 y5 y6\ny2 y3 y1\ny4 y4 y5 y6\n");
    spit(dir / "p.txt", "(x1 (x2 (x3 ((x4 x5) x6))))\n(S (NP x2) (VP x3 x1))\n((x4 x4) (x5 x6))\n");
  }
  void TearDown() override { fs::remove_all(dir); }

  Result run(const std::string& args, const std::string& env = "") {
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" STNMT_CLI_PATH "' " + args +
                            " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "out.txt"), slurp(dir / "err.txt")};
  }

  void preprocess() {
    ASSERT_EQ(run("preprocess --source s.txt --target t.txt --trees p.txt --out d").code, 0);
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, PreprocessReportsStats) {
  const Result r = run("preprocess --source s.txt --target t.txt --trees p.txt --out d");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("kept: 3\n"), std::string::npos);
  EXPECT_NE(r.out.find("dropped-by-parse: 0\n"), std::string::npos);
  EXPECT_TRUE(std::regex_search(r.out, std::regex("source vocabulary: 9 entries, covering approximately 100\\.0%")))
      << r.out;
  EXPECT_TRUE(fs::exists(dir / "d" / "train.trees"));
  EXPECT_EQ(slurp(dir / "d" / "stats.txt"), r.out);
}

TEST_F(Cli, PreprocessCountsBadParses) {
  spit(dir / "p.txt", "(x1 (x2 (x3 ((x4 x5) x6))))\n((x2 x3)\n((x4 x4) (x5 x6))\n");
  const Result r = run("preprocess --source s.txt --target t.txt --trees p.txt --out d");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dropped-by-parse: 1\n"), std::string::npos) << r.out;
}

TEST_F(Cli, MisalignedInputIsFatal) {
  spit(dir / "t.txt", "y1\ny2\n");
  const Result r = run("preprocess --source s.txt --target t.txt --out d");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("s.txt has 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("t.txt has 2"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(Cli, ZeroEpochCheckpointIsInitialisation) {
  preprocess();
  ASSERT_EQ(run("train --data d --model m.ckpt --encoder tree --coverage word --epochs 0 --seed 9").code, 0);
  const Model loaded = load_checkpoint(dir / "m.ckpt");
  const Model fresh(loaded.config(), 9);
  std::ostringstream a, b;
  write_checkpoint(a, loaded);
  write_checkpoint(b, fresh);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(loaded.config().dims, ModelDims::desk());
}

TEST_F(Cli, TranslateScoreAndAttention) {
  preprocess();
  Result r = run("train --data d --model m.ckpt --encoder tree --coverage tree --epochs 40 --batch-size 1 --log log.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string log = slurp(dir / "log.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 40);
  EXPECT_NE(log.find("\"epoch\":40"), std::string::npos);

  r = run("translate --model m.ckpt --data d --input d/train.src --trees d/train.trees --output h.txt --beam 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(slurp(dir / "h.txt").size(), 3u);
  r = run("score --hyp h.txt --ref h.txt");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("BLEU = 100.00, ", 0), 0u) << r.out;

  r = run("score --hyp d/train.tgt --ref d/train.tgt --source d/train.src");
  EXPECT_NE(r.out.find("(0,10]"), std::string::npos);

  r = run("attention --model m.ckpt --data d --input d/train.src --trees d/train.trees --out-dir att --max-len 3");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "att" / "1.att.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "target,x1,x2,x3,x4,x5,x6,[7],[8],[9],[10],[11]");
}

TEST_F(Cli, FlagManifestMismatchIsFatal) {
  preprocess();
  ASSERT_EQ(run("train --data d --model m.ckpt --encoder bidir --epochs 0").code, 0);
  const Result r = run("translate --model m.ckpt --data d --input d/train.src --trees d/train.trees --coverage word");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("does not match checkpoint"), std::string::npos) << r.err;
  EXPECT_NE(run("translate --model m.ckpt --data d --input d/train.src").code, 0);
}

TEST_F(Cli, UnknownFlagsAreFatalAndHelpListsFlags) {
  preprocess();
  EXPECT_NE(run("train --data d --model m.ckpt --epochs 0 --no-such-flag").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
  const Result help = run("train --help");
  EXPECT_EQ(help.code, 0);
  for (const char* flag : {"--encoder", "--coverage", "--dims", "--seed", "--batch-size", "--epochs", "--threads",
                           "--config", "--two-phase"}) {
    EXPECT_NE(help.out.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, ConfigFileAndEnvironmentPrecedence) {
  preprocess();
  spit(dir / "c.cfg", "# defaults\nencoder = tree\nepochs = 0\nseed = 4\n");
  ASSERT_EQ(run("train --data d --model a.ckpt --config c.cfg").code, 0);
  EXPECT_EQ(read_checkpoint_config(dir / "a.ckpt").encoder, EncoderKind::BottomUp);
  EXPECT_EQ(load_checkpoint(dir / "a.ckpt").seed(), 4u);

  ASSERT_EQ(run("train --data d --model b.ckpt --config c.cfg --encoder seq --seed 5").code, 0);
  EXPECT_EQ(read_checkpoint_config(dir / "b.ckpt").encoder, EncoderKind::Sequential);
  EXPECT_EQ(load_checkpoint(dir / "b.ckpt").seed(), 5u);

  ASSERT_EQ(run("train --data d --model c.ckpt --config c.cfg", "STNMT_SEED=6").code, 0);
  EXPECT_EQ(load_checkpoint(dir / "c.ckpt").seed(), 6u);

  spit(dir / "bad.cfg", "epochs\n");
  const Result r = run("train --data d --model d.ckpt --config bad.cfg");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("bad.cfg:1"), std::string::npos) << r.err;
}

TEST_F(Cli, TreeModelWithoutTreesIsFatal) {
  ASSERT_EQ(run("preprocess --source s.txt --target t.txt --out d").code, 0);
  const Result r = run("train --data d --model m.ckpt --encoder tree --epochs 0");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("train.trees"), std::string::npos) << r.err;
}

TEST_F(Cli, TwoPhaseWritesBothCheckpoints) {
  preprocess();
  const Result r = run("train --data d --model m.ckpt --encoder bidir --two-phase --epochs 1 --batch-size 3 --log log.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_checkpoint_config(dir / "m.ckpt.phase1").encoder, EncoderKind::BottomUp);
  EXPECT_EQ(read_checkpoint_config(dir / "m.ckpt").encoder, EncoderKind::Bidirectional);
  const std::string log = slurp(dir / "log.jsonl");
  EXPECT_NE(log.find("\"phase\":\"phase1\""), std::string::npos);
  EXPECT_NE(log.find("\"phase\":\"phase2\""), std::string::npos);
}
