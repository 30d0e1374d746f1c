#include <fstream>

#include <gtest/gtest.h>

#include "support/cli.hpp"
#include "support/fixtures.hpp"

namespace {

namespace fs = std::filesystem;

std::string q(const fs::path& p) { return cli::quote(p.string()); }

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Small pipeline settings so the CLI tests stay quick.
const char* kFast =
    " --set kg.input_dim=8 --set kg.hidden_dim=8 --set kg.output_dim=8 --set kg.epochs=20"
    " --set zsl.hidden_width=16 --set zsl.fusion_semantic_width=16 --set zsl.fusion_secondary_width=16"
    " --set zsl.relation_width=16 --set zsl.epochs=20 --set zsl.learning_rate=0.001";

}  // namespace

TEST(Cli, IngestPrintsSummary) {
  const auto dir = fixtures::scratch_dir("cli-ingest");
  write(dir / "g.tsv", "# toy\nIsA\tdog\tanimal\nIsA\tcat\tanimal\nHasA\tcat\twhiskers\tbroken\n\nHasA\tdog\ttail\t2.5\n");
  const auto r = cli::run("ingest --graph " + q(dir / "g.tsv") + " --out-dir " + q(dir / "out"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("nodes=4 relations=2 edges=3"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "graph.tsv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "ingest.manifest"));
}

TEST(Cli, MissingInputIsADataError) {
  const auto dir = fixtures::scratch_dir("cli-missing");
  EXPECT_EQ(cli::run("ingest --graph " + q(dir / "nope.tsv") + " --out-dir " + q(dir)).exit_code, 2);
}

TEST(Cli, UsageErrorsExitWithOne) {
  const auto dir = fixtures::scratch_dir("cli-usage");
  EXPECT_EQ(cli::run("synth --scenario imaginary --out-dir " + q(dir)).exit_code, 1);
  EXPECT_EQ(cli::run("no-such-command").exit_code, 1);
  EXPECT_EQ(cli::run("ingest --set kg.bogus=1").exit_code, 1);
}

TEST(Cli, ConceptNetLanguageFilter) {
  const auto dir = fixtures::scratch_dir("cli-conceptnet");
  write(dir / "dump.csv",
        "/a/1\t/r/IsA\t/c/en/dog/n\t/c/en/animal\t{}\n"
        "/a/2\t/r/IsA\t/c/fr/chien\t/c/fr/animal\t{}\n"
        "/a/3\t/r/RelatedTo\t/c/en/dog\t/c/fr/chien\t{}\n");
  const auto r = cli::run("ingest --graph " + q(dir / "dump.csv") +
                          " --format conceptnet-dump --language en --out-dir " + q(dir / "out"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("nodes=2 relations=1 edges=1"), std::string::npos) << r.out;
}

TEST(Cli, SubgraphOfAChain) {
  const auto dir = fixtures::scratch_dir("cli-subgraph");
  write(dir / "g.tsv", "r\ta\tb\nr\tb\tc\nr\tc\td\nr\td\te\n");
  write(dir / "seeds.txt", "c\nunicorn\n");
  const auto base = "subgraph --graph " + q(dir / "g.tsv") + " --seeds " + q(dir / "seeds.txt");
  const auto r1 = cli::run(base + " --radius 1 --out-dir " + q(dir / "r1"));
  EXPECT_EQ(r1.exit_code, 0);
  EXPECT_NE(r1.out.find("nodes=3 relations=1 edges=2"), std::string::npos) << r1.out;
  EXPECT_NE(r1.out.find("missing=unicorn"), std::string::npos);
  const auto r0 = cli::run(base + " --radius 0 --out-dir " + q(dir / "r0"));
  EXPECT_NE(r0.out.find("nodes=1 relations=0 edges=0"), std::string::npos) << r0.out;
}

TEST(Cli, SynthIsDeterministicAndShaped) {
  const auto dir = fixtures::scratch_dir("cli-synth");
  ASSERT_EQ(cli::run("synth --scenario animals-shape --seed 4 --out-dir " + q(dir / "a")).exit_code, 0);
  ASSERT_EQ(cli::run("synth --scenario animals-shape --seed 4 --out-dir " + q(dir / "b")).exit_code, 0);
  for (const char* f : {"graph.tsv", "split.txt", "attributes.txt", "word_vectors.txt", "visual.txt", "seeds.txt"}) {
    EXPECT_EQ(cli::slurp(dir / "a" / f), cli::slurp(dir / "b" / f)) << f;
  }
  std::ifstream split(dir / "a" / "split.txt");
  std::string line, section;
  int seen = 0, unseen = 0;
  while (std::getline(split, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') section = line;
    else (section == "[seen]" ? seen : unseen)++;
  }
  EXPECT_EQ(seen, 40);
  EXPECT_EQ(unseen, 10);
  // The generated config carries the scenario's recommended settings.
  const auto conf = cli::slurp(dir / "a" / "kcse.conf");
  EXPECT_NE(conf.find("[kg]"), std::string::npos);
  EXPECT_NE(conf.find("[zsl]"), std::string::npos);
}

TEST(Cli, EvalRejectsMismatchedVisualWidth) {
  const auto dir = fixtures::scratch_dir("cli-dims");
  ASSERT_EQ(cli::run("synth --scenario separable --out-dir " + q(dir / "a")).exit_code, 0);
  ASSERT_EQ(cli::run("synth --scenario animals-shape --out-dir " + q(dir / "b")).exit_code, 0);
  ASSERT_EQ(cli::run("train-zsl --config " + q(dir / "a" / "kcse.conf") + kFast + " --out-dir " + q(dir / "m"))
                .exit_code,
            0);
  // Model trained on 32-d features, evaluated on 64-d ones.
  const auto r = cli::run("eval-zsl --config " + q(dir / "a" / "kcse.conf") + " --visual " +
                          q(dir / "b" / "visual.txt") + " --zsl-checkpoint " + q(dir / "m" / "zsl.params") +
                          " --out-dir " + q(dir / "e"));
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, FullPipelineAndManifestReplay) {
  const auto dir = fixtures::scratch_dir("cli-pipeline");
  ASSERT_EQ(cli::run("synth --scenario separable --seed 3 --out-dir " + q(dir)).exit_code, 0);
  const auto conf = q(dir / "kcse.conf");
  ASSERT_EQ(cli::run("train-kg --config " + conf + kFast + " --out-dir " + q(dir / "kg")).exit_code, 0);
  ASSERT_EQ(cli::run("extract-cse --config " + conf + kFast + " --checkpoint " + q(dir / "kg" / "kg.params") +
                     " --out-dir " + q(dir / "cse"))
                .exit_code,
            0);
  const auto zsl = "--config " + conf + kFast + " --sources ha,cse --cse " + q(dir / "cse" / "cse.txt");
  ASSERT_EQ(cli::run("train-zsl " + zsl + " --out-dir " + q(dir / "zsl")).exit_code, 0);
  const auto eval = cli::run("eval-zsl " + zsl + " --zsl-checkpoint " + q(dir / "zsl" / "zsl.params") +
                             " --out-dir " + q(dir / "eval"));
  ASSERT_EQ(eval.exit_code, 0);
  EXPECT_NE(eval.out.find("top1 "), std::string::npos);

  // Replaying a manifest into a fresh directory reproduces every artifact.
  const auto replay = cli::run("train-kg --config " + q(dir / "kg" / "train-kg.manifest") + " --out-dir " +
                               q(dir / "kg2"));
  ASSERT_EQ(replay.exit_code, 0);
  EXPECT_EQ(cli::slurp(dir / "kg" / "kg.params"), cli::slurp(dir / "kg2" / "kg.params"));
  EXPECT_EQ(cli::slurp(dir / "kg" / "kg_loss.txt"), cli::slurp(dir / "kg2" / "kg_loss.txt"));
}
