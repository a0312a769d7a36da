// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "metaphor_eval/runner.hpp"
#include "metaphor_eval/semantic.hpp"

using nlohmann::json;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

Result run(const mtest::TempDir& dir, const std::string& args) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string("'") + METAPHOR_EVAL_CLI + "' " + args + " 2>'" + err_path.string() + "'";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf;
  for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0;) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = mtest::read_file(err_path);
  return r;
}

struct Files {
  mtest::TempDir dir;
  std::string corpus, model, self, partial;

  Files() {
    auto f = mtest::mini_fixture();
    mtest::write_file(dir / "corpus.jsonl", f.corpus_jsonl);
    mtest::write_file(dir / "model.jsonl", f.model_predictions);
    mtest::write_file(dir / "self.jsonl", f.self_predictions);
    mtest::write_file(dir / "partial.jsonl", f.partial_predictions);
    corpus = (dir / "corpus.jsonl").string();
    model = (dir / "model.jsonl").string();
    self = (dir / "self.jsonl").string();
    partial = (dir / "partial.jsonl").string();
  }
};

}  // namespace

TEST_CASE("help and bad usage") {
  mtest::TempDir dir;
  auto help = run(dir, "--help");
  CHECK(help.status == 0);
  for (const char* verb : {"validate", "stats", "eval", "iaa", "correlate", "assign", "serve", "plan-frames"})
    CHECK(help.out.find(verb) != std::string::npos);
  CHECK(run(dir, "").status != 0);
  CHECK(run(dir, "frobnicate").status != 0);
  auto missing = run(dir, "eval --corpus /nonexistent.jsonl --predictions m:1:/nonexistent.jsonl");
  CHECK(missing.status == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("validate and stats") {
  Files f;
  auto v = run(f.dir, "validate --corpus " + f.corpus + " --predictions m:1:" + f.partial);
  CHECK(v.status == 0);
  CHECK(v.out.find("corpus: 8 videos, 24 captions") != std::string::npos);
  CHECK(v.out.find("4 of 6 test videos") != std::string::npos);

  auto s = run(f.dir, "stats --corpus " + f.corpus + " --format json");
  REQUIRE(s.status == 0);
  auto j = json::parse(s.out);
  CHECK(j["videos"] == 8);
  CHECK(j["captions"] == 24);
  CHECK(j["mean_duration_s"].get<double>() == doctest::Approx((30 + 45 + 61 + 20 + 75 + 52 + 40 + 33) / 8.0));

  mtest::write_file(f.dir / "broken.jsonl", mtest::read_file(f.corpus) + "{\n");
  auto bad = run(f.dir, "validate --corpus " + (f.dir / "broken.jsonl").string());
  CHECK(bad.status == 1);
  CHECK(bad.err.find("line 9") != std::string::npos);
}

TEST_CASE("eval output is byte-identical across runs") {
  Files f;
  const std::string args = "eval --corpus " + f.corpus + " --predictions m:1:" + f.model + " --predictions m:2:" +
                           f.partial + " --predictions oracle:1:" + f.self;
  auto a = run(f.dir, args), b = run(f.dir, args + " --concurrency 1");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("| Model | BLEU-4") != std::string::npos);
  CHECK(a.err.find("WARN m run 2: missing 2 of 6") != std::string::npos);

  auto json_out = run(f.dir, args + " --format json --out " + (f.dir / "r.json").string());
  REQUIRE(json_out.status == 0);
  auto reports = metaphor_eval::reports_from_json(mtest::read_file(f.dir / "r.json"));
  REQUIRE(reports.size() == 2);
  const auto& best = reports[0].model_id == "oracle" ? reports[0] : reports[1];
  CHECK(best.columns.at(metaphor_eval::Column::bleu4).mean == doctest::Approx(100.0));
  CHECK(best.columns.at(metaphor_eval::Column::rouge_l).mean == doctest::Approx(100.0));
  CHECK(best.columns.at(metaphor_eval::Column::bert_f1).mean == doctest::Approx(1.0));

  // Markdown re-rendered from the JSON report matches the direct run.
  auto replay = run(f.dir, "eval --replay " + (f.dir / "r.json").string());
  REQUIRE(replay.status == 0);
  CHECK(replay.out == metaphor_eval::render_markdown(reports));

  auto csv = run(f.dir, args + " --format csv --metrics bleu4,rouge_l");
  REQUIRE(csv.status == 0);
  CHECK(csv.out.find("bleu4") != std::string::npos);
  CHECK(csv.out.find("acd") == std::string::npos);

  CHECK(run(f.dir, args + " --format pdf").status != 0);
  CHECK(run(f.dir, args + " --metrics meteor").status != 0);
}

TEST_CASE("eval writes per-caption audits that feed correlate") {
  Files f;
  const auto audits = f.dir / "audit";
  auto r = run(f.dir, "eval --corpus " + f.corpus + " --predictions m:1:" + f.model + " --audit-dir " +
                          audits.string());
  REQUIRE(r.status == 0);
  auto audit = metaphor_eval::acd_report_from_json(mtest::read_file(audits / "m.1.acd.json"));
  CHECK(audit.per_caption.size() == 6);

  std::vector<metaphor_eval::JudgmentLabel> labels;
  for (std::size_t i = 0; i < audit.per_caption.size(); ++i) {
    const auto& v = audit.per_caption[i].video_id;
    labels.push_back(mtest::make_label(v, "m", "A", true, i % 2 == 0, true, true));
    labels.push_back(mtest::make_label(v, "m", "B", true, i % 3 == 0, true, true));
  }
  mtest::write_file(f.dir / "labels.csv", metaphor_eval::labels_to_csv(labels));

  auto c = run(f.dir, "correlate --labels " + (f.dir / "labels.csv").string() + " --acd m:" +
                          (audits / "m.1.acd.json").string());
  REQUIRE(c.status == 0);
  auto j = json::parse(c.out);
  CHECK(j["n"] == 6);
  std::map<std::pair<std::string, std::string>, double> contrib;
  for (const auto& row : audit.per_caption) contrib[{row.video_id, "m"}] = row.contribution;
  auto in = metaphor_eval::correlation_input(contrib, labels);
  CHECK(j["pearson_r"].get<double>() == doctest::Approx(metaphor_eval::pearson(in.acd, in.creativity)));

  auto iaa = run(f.dir, "iaa --labels " + (f.dir / "labels.csv").string());
  REQUIRE(iaa.status == 0);
  CHECK(iaa.out.find("| A vs B |") != std::string::npos);
  CHECK(iaa.out.find("Fleiss") != std::string::npos);
  auto iaa_json = run(f.dir, "iaa --labels " + (f.dir / "labels.csv").string() + " --format json");
  REQUIRE(iaa_json.status == 0);
  CHECK(json::accept(iaa_json.out));
}

TEST_CASE("assign and plan-frames") {
  Files f;
  auto a = run(f.dir, "assign --corpus " + f.corpus + " --annotators A,B --per-annotator 4 --shared 2 --seed 3");
  REQUIRE(a.status == 0);
  auto plan = metaphor_eval::plan_from_json(a.out);
  CHECK(plan.shared.size() == 2);
  CHECK(plan.all_videos().size() == 6);
  CHECK(run(f.dir, "assign --corpus " + f.corpus + " --annotators A,B --per-annotator 4 --shared 2 --seed 3").out ==
        a.out);
  auto too_many = run(f.dir, "assign --corpus " + f.corpus + " --per-annotator 50 --shared 25");
  CHECK(too_many.status == 1);

  auto p = run(f.dir, "plan-frames --duration 90");
  REQUIRE(p.status == 0);
  auto groups = json::parse(p.out)["groups"];
  CHECK(groups.size() == 1);
  CHECK(groups[0].get<std::vector<double>>() == std::vector<double>{10, 20, 40, 50, 70, 80});
  auto clips = run(f.dir, "plan-frames --duration 60 --clips 2");
  REQUIRE(clips.status == 0);
  CHECK(json::parse(clips.out)["groups"].size() == 2);
  CHECK(run(f.dir, "plan-frames --duration 60 --clips 3").status == 1);
  auto all = run(f.dir, "plan-frames --corpus " + f.corpus);
  REQUIRE(all.status == 0);
  CHECK(json::parse(all.out).size() == 8);
}
