// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "leafseg/cli.hpp"
#include "scratch.hpp"

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "leafseg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return leafseg::cli::run(static_cast<int>(args.size()), argv.data());
}

bool exists(const std::string& p) { return std::filesystem::exists(p); }

}  // namespace

TEST_CASE("cli: synth, sidecar and config replay") {
  Scratch s;
  const std::string a = s.path("plant.csv"), b = s.path("again.csv");
  REQUIRE(run({"--seed", "3", "synth", "--leaves", "3", "--points-per-leaf", "40", "-o", a}) == 0);
  REQUIRE(exists(a + ".config.json"));
  REQUIRE(run({"--config", a + ".config.json", "synth", "-o", b}) == 0);
  CHECK(Scratch::read(a) == Scratch::read(b));
  CHECK(Scratch::read(b).rfind("x,y,z,r,g,b,label\n", 0) == 0);
  // Explicit flags beat config values.
  REQUIRE(run({"--config", a + ".config.json", "synth", "--leaves", "4", "-o", b}) == 0);
  CHECK(Scratch::read(a) != Scratch::read(b));
}

TEST_CASE("cli: error exit codes") {
  Scratch s;
  CHECK(run({"frobnicate"}) == leafseg::cli::kInputError);
  CHECK(run({}) == leafseg::cli::kInputError);
  const std::string bad = s.write("bad.csv", "x,y,z,r,g,b\n1,2\n");
  CHECK(run({"graph", "-i", bad, "-o", s.path("g.csv")}) == leafseg::cli::kInputError);
  CHECK(run({"graph", "-i", s.path("missing.csv"), "-o", s.path("g.csv")}) == leafseg::cli::kInputError);
  CHECK(run({"synth", "--leaves", "0", "-o", s.path("p.csv")}) == leafseg::cli::kInputError);
  CHECK(run({"synth", "--leaves", "many", "-o", s.path("p.csv")}) == leafseg::cli::kInputError);
  const std::string cfg = s.write("c.json", "{\"command\":\"synth\",\"bogus\":1}");
  CHECK(run({"--config", cfg, "synth", "-o", s.path("p.csv")}) == leafseg::cli::kInputError);
  CHECK(run({"synth", "--help"}) == 0);
}

TEST_CASE("cli: pipeline synth -> similarity -> cluster -> eval") {
  Scratch s;
  const std::string plant = s.path("p.csv");
  REQUIRE(run({"synth", "--leaves", "3", "--points-per-leaf", "40", "-o", plant}) == 0);
  REQUIRE(run({"graph", "-i", plant, "-o", s.path("g.csv")}) == 0);
  CHECK(Scratch::read(s.path("g.csv")).rfind("u,v,length\n", 0) == 0);
  REQUIRE(run({"distances", "-i", plant, "-o", s.path("d.bin"), "--method", "sparse"}) == 0);
  REQUIRE(run({"similarity", "--distances", s.path("d.bin"), "-o", s.path("s.csv")}) == 0);
  REQUIRE(run({"optimize", "-i", plant, "-o", s.path("e.csv"), "--iterations", "5", "--points", "60", "--cloud-out",
               s.path("sub.csv")}) == 0);
  CHECK(exists(s.path("e.trace.csv")));
  // Embeddings belong to the subsampled cloud.
  CHECK(run({"loss", "-i", plant, "--embeddings", s.path("e.csv")}) == leafseg::cli::kInputError);
  REQUIRE(run({"loss", "-i", s.path("sub.csv"), "--embeddings", s.path("e.csv"), "--points", "60", "--gradient",
               s.path("grad.csv")}) == 0);
  CHECK(exists(s.path("grad.csv")));
  REQUIRE(run({"augment", "-i", plant, "-o", s.path("v0.csv"), "--out2", s.path("v1.csv"), "--views", "2",
               "--occlusion", "--distortion", "--record-draws", "--indices", s.path("idx.csv")}) == 0);
  CHECK(exists(s.path("v1.csv")));
  CHECK(Scratch::read(s.path("v0.csv.config.json")).find("\"draws\"") != std::string::npos);
  REQUIRE(run({"--config", s.path("v0.csv.config.json"), "augment", "-i", plant, "-o", s.path("w0.csv"), "--out2",
               s.path("w1.csv")}) == 0);
  CHECK(Scratch::read(s.path("v0.csv")) == Scratch::read(s.path("w0.csv")));
  CHECK(Scratch::read(s.path("v1.csv")) == Scratch::read(s.path("w1.csv")));
  REQUIRE(run({"cluster", "-i", plant, "--method", "dbscan", "--features", "positions", "--eps", "0.02", "-o",
               s.path("a.csv")}) == 0);
  REQUIRE(run({"eval", "-i", plant, "--pred", s.path("a.csv"), "-o", s.path("r.json")}) == 0);
  CHECK(Scratch::read(s.path("r.json")).find("\"map\"") != std::string::npos);
}

TEST_CASE("cli: sweep writes table, summary and plot") {
  Scratch s;
  REQUIRE(run({"sweep", "--leaves", "3", "--points-per-leaf", "30", "--reps", "1", "--magnitudes", "0,0.3", "-o",
               s.path("sw.csv")}) == 0);
  CHECK(Scratch::read(s.path("sw.csv")).rfind("method,noise_kind,magnitude,rep,map,ap50\n", 0) == 0);
  CHECK(exists(s.path("sw.summary.csv")));
  CHECK(Scratch::read(s.path("sw.svg")).find("<svg") != std::string::npos);
}
