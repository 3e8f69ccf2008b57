// Copyright 2026 The coopgan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end checks of the coopgan executable: exit codes, determinism and
// checkpoint round trips through the subcommands.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coopgan/checkpoint.hpp"
#include "coopgan/metrics.hpp"

namespace coopgan {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::vector<std::string>& args) {
  std::string cmd = "'" COOPGAN_CLI "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::vector<std::string> kTiny = {
    "--set", "vocab_size=20",        "--set", "seq_len=6",          "--set", "oracle_embed_dim=8",
    "--set", "oracle_hidden_dim=8",  "--set", "train_size=128",     "--set", "test_size=64",
    "--set", "embed_dim=8",          "--set", "hidden_dim=8",       "--set", "disc_embed_dim=8",
    "--set", "disc_channels=6",      "--set", "pretrain_epochs=2",  "--set", "pretrain_batch_size=32",
    "--set", "adv_epochs=4",         "--set", "batch_size=8",       "--set", "eval_every=2",
    "--set", "eval_samples=64",
};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() { return fs::path(COOPGAN_SCRATCH) / "cli"; }
  static fs::path pretrained() { return dir() / "pre.ckpt"; }

  static void SetUpTestSuite() {
    fs::remove_all(dir());
    fs::create_directories(dir());
    auto r = run(cat({"pretrain", "--seed", "4", "--run-dir", (dir() / "pre").string(), "--out", pretrained().string()},
                     kTiny));
    ASSERT_EQ(r.code, 0);
  }
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"pretrain", "--set", "vocab_size=0", "--run-dir", (dir() / "bad").string()}).code, 2);
  EXPECT_EQ(run({"pretrain", "--set", "no_such_key=1", "--run-dir", (dir() / "bad").string()}).code, 2);
  EXPECT_EQ(run({"generate", "--checkpoint", pretrained().string(), "--temperature", "0"}).code, 2);
}

TEST_F(Cli, MissingCheckpointExitsTwo) {
  EXPECT_EQ(run({"train", "--from-checkpoint", (dir() / "absent.ckpt").string()}).code, 2);
  EXPECT_EQ(run({"eval", "--checkpoint", (dir() / "absent.ckpt").string()}).code, 2);
  EXPECT_EQ(run({"generate", "--checkpoint", (dir() / "absent.ckpt").string()}).code, 2);
}

TEST_F(Cli, PretrainWithSameSeedGivesIdenticalCheckpointBytes) {
  const fs::path again = dir() / "again.ckpt";
  auto r = run(cat({"pretrain", "--seed", "4", "--run-dir", (dir() / "again").string(), "--out", again.string()}, kTiny));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(again), slurp(pretrained()));
  EXPECT_EQ(slurp(dir() / "again" / "metrics.jsonl"), slurp(dir() / "pre" / "metrics.jsonl"));
  const fs::path other = dir() / "other.ckpt";
  ASSERT_EQ(run(cat({"pretrain", "--seed", "5", "--run-dir", (dir() / "other").string(), "--out", other.string()}, kTiny))
                .code,
            0);
  EXPECT_NE(slurp(other), slurp(pretrained()));
}

TEST_F(Cli, TrainWritesCheckpointsAndEvalReplaysTheLog) {
  const fs::path run_dir = dir() / "train";
  auto r = run({"train", "--from-checkpoint", pretrained().string(), "--run-dir", run_dir.string()});
  ASSERT_EQ(r.code, 0);
  for (auto name : {"adv-2.ckpt", "adv-4.ckpt", "final.ckpt", "metrics.jsonl"}) EXPECT_TRUE(fs::exists(run_dir / name));
  auto log = metrics::read_log(run_dir / "metrics.jsonl");
  EXPECT_EQ(log.header["command"], "train");
  const metrics::MetricsRecord* last = nullptr;
  for (const auto& rec : log.records)
    if (rec.nll_gen) last = &rec;
  ASSERT_NE(last, nullptr);
  EXPECT_EQ(last->epoch, 4u);

  auto ev = run({"eval", "--checkpoint", (run_dir / "final.ckpt").string()});
  ASSERT_EQ(ev.code, 0);
  auto rec = metrics::record_from_json(nlohmann::json::parse(lines(ev.out).back()));
  EXPECT_EQ(rec.nll_gen, last->nll_gen);
  EXPECT_EQ(rec.nll_oracle, last->nll_oracle);
  EXPECT_EQ(rec.nll_lm, last->nll_lm);
  EXPECT_EQ(run({"eval", "--checkpoint", (run_dir / "final.ckpt").string()}).out, ev.out);

  auto ck = load_checkpoint(run_dir / "final.ckpt");
  EXPECT_EQ(ck.state.epoch, 4u);
}

TEST_F(Cli, TrainRejectsUnknownAblation) {
  EXPECT_EQ(run({"train", "--from-checkpoint", pretrained().string(), "--ablation", "half", "--run-dir",
                 (dir() / "bad-ab").string()})
                .code,
            2);
}

TEST_F(Cli, GenerateEmitsRequestedLinesDeterministically) {
  auto a = run({"generate", "--checkpoint", pretrained().string(), "--n", "7", "--seed", "9"});
  ASSERT_EQ(a.code, 0);
  auto ls = lines(a.out);
  ASSERT_EQ(ls.size(), 7u);
  for (const auto& l : ls) {
    std::istringstream in(l);
    int id, count = 0;
    while (in >> id) {
      EXPECT_GE(id, 0);
      EXPECT_LT(id, 20);
      ++count;
    }
    EXPECT_EQ(count, 6);
  }
  EXPECT_EQ(run({"generate", "--checkpoint", pretrained().string(), "--n", "7", "--seed", "9"}).out, a.out);
  EXPECT_NE(run({"generate", "--checkpoint", pretrained().string(), "--n", "7", "--seed", "10"}).out, a.out);
}

TEST_F(Cli, CorpusRunDecodesAndChecksVocabulary) {
  const fs::path corpus = dir() / "corpus.txt";
  {
    std::ofstream out(corpus);
    const char* words[] = {"the", "cat", "sat", "on", "a", "mat", "dog", "ran", "to", "park"};
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 3 + i % 4; ++j) out << (j ? " " : "") << words[(i * 7 + j * 3) % 10];
      out << "\n";
    }
  }
  const fs::path ckpt = dir() / "text.ckpt";
  auto r = run({"pretrain", "--corpus", corpus.string(), "--seed", "2", "--run-dir", (dir() / "text").string(), "--out",
                ckpt.string(), "--set", "seq_len=8", "--set", "embed_dim=8", "--set", "hidden_dim=8", "--set",
                "disc_embed_dim=8", "--set", "disc_channels=4", "--set", "pretrain_epochs=2", "--set",
                "eval_samples=16"});
  ASSERT_EQ(r.code, 0);
  auto ck = load_checkpoint(ckpt);
  ASSERT_TRUE(ck.vocab.has_value());

  auto g = run({"generate", "--checkpoint", ckpt.string(), "--n", "5", "--seed", "1"});
  ASSERT_EQ(g.code, 0);
  ASSERT_EQ(lines(g.out).size(), 5u);
  const auto& tokens = ck.vocab->tokens();
  const std::set<std::string> known(tokens.begin(), tokens.end());
  EXPECT_EQ(known.size(), 14u);  // ten words and four reserved symbols
  for (const auto& l : lines(g.out)) {
    std::istringstream in(l);
    for (std::string w; in >> w;) EXPECT_TRUE(known.count(w)) << w;
  }

  // The pretrain run saved its vocabulary next to the log; any other list is rejected.
  const fs::path held_out = dir() / "test.txt";
  {
    std::ofstream out(held_out);
    out << "the cat sat\na dog ran to the park\n";
  }
  EXPECT_EQ(run({"eval", "--checkpoint", ckpt.string(), "--test-corpus", held_out.string(), "--vocab",
                 (dir() / "text" / "vocab.txt").string()})
                .code,
            0);
  const fs::path wrong = dir() / "wrong_vocab.txt";
  {
    std::ofstream out(wrong);
    out << "<pad>\n<bos>\n<eos>\n<unk>\nzebra\n";
  }
  EXPECT_EQ(run({"eval", "--checkpoint", ckpt.string(), "--test-corpus", held_out.string(), "--vocab", wrong.string()})
                .code,
            2);
}

}  // namespace
}  // namespace coopgan
