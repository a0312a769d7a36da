// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include <doctest.h>

#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "metaphor_eval/server.hpp"

using namespace metaphor_eval;
using nlohmann::json;

namespace {

struct Setup {
  mtest::TempDir dir;
  Corpus corpus;
  std::vector<PredictionSet> predictions;
  AssignmentPlan plan;

  Setup() {
    auto f = mtest::mini_fixture();
    std::istringstream c(f.corpus_jsonl);
    corpus = parse_corpus(c);
    std::istringstream m1(f.model_predictions), m1b(f.self_predictions), m2(f.self_predictions);
    predictions.push_back(parse_predictions(m1b, "m1", 2));
    predictions.push_back(parse_predictions(m1, "m1", 1));
    predictions.push_back(parse_predictions(m2, "m2", 1));
    auto videos = corpus.ids(Split::test);
    std::vector<std::string> who{"A", "B"};
    plan = assign(videos, who, 4, 2, 5);
  }

  std::filesystem::path store_path() const { return dir / "labels.jsonl"; }
};

std::string submission(const std::string& annotator, const std::string& task, bool value) {
  return json{{"annotator_id", annotator}, {"task_id", task}, {"fluency", value},
              {"creativity", !value},      {"pcc", value},     {"consistency", true}}
      .dump();
}

}  // namespace

TEST_CASE("label store replays the log and keeps the latest label") {
  mtest::TempDir dir;
  auto path = dir / "labels.jsonl";
  {
    LabelStore store(path);
    CHECK(store.size() == 0);
    store.put(mtest::make_label("v1", "m", "A", true, true, true, true, 1000));
    store.put(mtest::make_label("v1", "m", "B", true, true, true, true, 1000));
    auto second = store.put(mtest::make_label("v1", "m", "A", false, false, false, false, 1000));
    CHECK(second.timestamp > Timestamp{std::chrono::milliseconds{1000}});
    CHECK(store.size() == 2);
  }
  std::istringstream raw(mtest::read_file(path));
  std::size_t lines = 0;
  for (std::string l; std::getline(raw, l);) ++lines;
  CHECK(lines == 3);

  LabelStore again(path);
  CHECK(again.size() == 2);
  auto a = again.find("v1", "m", "A");
  REQUIRE(a);
  CHECK_FALSE(a->fluency);
  CHECK_FALSE(again.find("v2", "m", "A"));
  CHECK(again.rows().size() == 2);

  auto l = mtest::make_label("v", "m", "A", true, false, true, false, 1792000000123);
  CHECK(label_from_json_line(label_to_json_line(l)) == l);
  CHECK_THROWS_AS(label_from_json_line("{\"video_id\": 3}", 4), DataError);

  mtest::write_file(dir / "bad.jsonl", label_to_json_line(l) + "\nnot json\n");
  try {
    LabelStore broken(dir / "bad.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(LabelStore("/nonexistent-dir/labels.jsonl"), Error);
}

TEST_CASE("judgment queue") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService service(s.corpus, s.predictions, s.plan, store);

  CHECK(service.tasks().size() == 12);  // 6 distinct videos x 2 models
  std::set<std::string> ids;
  for (const auto& t : service.tasks()) ids.insert(t.id);
  CHECK(ids.size() == 12);
  for (const auto& t : service.tasks()) {
    // The lowest run supplies the caption.
    if (t.model_id == "m1" && t.video_id == "t3") CHECK(t.caption == "A baby sleeping in a crib");
    CHECK(t.id.find("m1") == std::string::npos);
    CHECK(t.id.find("m2") == std::string::npos);
  }
  CHECK(service.tasks_for("A").size() == 8);
  CHECK(service.tasks_for("nobody").empty());

  std::size_t done = 0;
  std::set<std::string> seen;
  for (;;) {
    auto r = service.next_task("A");
    REQUIRE(r.status == 200);
    auto j = json::parse(r.body);
    if (j.value("done", false)) {
      CHECK(j["progress"]["labeled"] == 8);
      CHECK(j["progress"]["assigned"] == 8);
      break;
    }
    CHECK(j["progress"]["labeled"] == done);
    CHECK(seen.insert(j["task_id"].get<std::string>()).second);
    auto sub = service.submit(submission("A", j["task_id"], true));
    REQUIRE(sub.status == 200);
    CHECK(json::parse(sub.body)["ok"] == true);
    ++done;
  }
  CHECK(done == 8);
  CHECK(store.size() == 8);

  auto p = json::parse(service.progress().body);
  CHECK(p["labels"] == 8);
  CHECK(p["annotators"][0]["annotator"] == "A");
  CHECK(p["annotators"][1]["labeled"] == 0);
  CHECK(json::parse(service.progress("B").body)["assigned"] == 8);

  // Resubmitting replaces the label instead of adding one.
  auto first = *seen.begin();
  CHECK(service.submit(submission("A", first, false)).status == 200);
  CHECK(store.size() == 8);
}

TEST_CASE("blind mode hides the model") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService blind(s.corpus, s.predictions, s.plan, store, true);
  for (const auto* t : blind.tasks_for("B")) {
    auto body = blind.task(t->id, "B").body;
    auto j = json::parse(body);
    CHECK_FALSE(j.contains("model_id"));
    CHECK(j["blind"] == true);
    CHECK(body.find("\"m1\"") == std::string::npos);
    CHECK(body.find("\"m2\"") == std::string::npos);
  }
  CHECK_FALSE(json::parse(blind.next_task("B").body).contains("model_id"));

  JudgmentService open(s.corpus, s.predictions, s.plan, store, false);
  auto j = json::parse(open.next_task("B").body);
  CHECK(j.contains("model_id"));

  // Submission by (video, model) still works when the model is known.
  auto sub = open.submit(json{{"annotator_id", "B"}, {"video_id", j["video_id"]}, {"model_id", j["model_id"]},
                              {"fluency", true}, {"creativity", true}, {"pcc", true}, {"consistency", true}}
                             .dump());
  CHECK(sub.status == 200);
}

TEST_CASE("judgment API errors") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService service(s.corpus, s.predictions, s.plan, store);
  const auto& a_task = *service.tasks_for("A").front();
  std::string not_for_b;
  for (const auto* t : service.tasks_for("A")) {
    bool shared = false;
    for (const auto* u : service.tasks_for("B")) shared |= (u == t);
    if (!shared) not_for_b = t->id;
  }
  REQUIRE_FALSE(not_for_b.empty());

  CHECK(service.next_task("").status == 400);
  CHECK(service.next_task("Z").status == 404);
  CHECK(service.task("ffffffffffff").status == 404);
  CHECK(service.progress("Z").status == 404);
  CHECK(service.submit("{not json").status == 400);
  CHECK(service.submit("[1,2]").status == 400);
  CHECK(service.submit(json{{"task_id", a_task.id}, {"fluency", true}}.dump()).status == 400);
  CHECK(service.submit(submission("Z", a_task.id, true)).status == 404);
  CHECK(service.submit(submission("A", "ffffffffffff", true)).status == 404);
  CHECK(service.submit(submission("B", not_for_b, true)).status == 403);
  auto j = json::parse(submission("A", a_task.id, true));
  j["pcc"] = "yes";
  CHECK(service.submit(j.dump()).status == 400);
  j.erase("pcc");
  CHECK(service.submit(j.dump()).status == 400);
  CHECK(store.size() == 0);

  AssignmentPlan stray = s.plan;
  stray.shared.push_back("missing-video");
  CHECK_THROWS_AS(JudgmentService(s.corpus, s.predictions, stray, store), DataError);
}

TEST_CASE("HTTP round trip: judgments exported as CSV reproduce agreement") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService service(s.corpus, s.predictions, s.plan, store);
  ServeOptions opts;
  opts.port = 0;
  JudgmentServer server(service, opts);
  std::thread loop([&] { server.run(); });

  httplib::Client client("127.0.0.1", server.port());
  client.set_connection_timeout(5);

  std::vector<JudgmentLabel> sent;
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.5);
  for (const std::string who : {"A", "B"}) {
    for (;;) {
      auto res = client.Get(("/api/tasks/next?annotator=" + who).c_str());
      REQUIRE(res);
      REQUIRE(res->status == 200);
      auto j = json::parse(res->body);
      if (j.value("done", false)) break;
      CHECK_FALSE(j.contains("model_id"));
      const auto& task = *std::find_if(service.tasks().begin(), service.tasks().end(),
                                       [&](const Task& t) { return t.id == j["task_id"]; });
      auto label = mtest::make_label(task.video_id, task.model_id, who, coin(rng), coin(rng), coin(rng), coin(rng));
      sent.push_back(label);
      json body{{"annotator_id", who},
                {"task_id", task.id},
                {"fluency", label.fluency},
                {"creativity", label.creativity},
                {"pcc", label.primary_concept_consistency},
                {"consistency", label.consistency}};
      auto post = client.Post("/api/labels", body.dump(), "application/json");
      REQUIRE(post);
      CHECK(post->status == 200);
    }
  }
  CHECK(sent.size() == 16);

  auto bad = client.Post("/api/labels", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto unknown = client.Get("/api/tasks/next?annotator=Q");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  auto index = client.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);

  auto csv = client.Get("/api/export.csv");
  REQUIRE(csv);
  CHECK(csv->status == 200);
  CHECK(csv->get_header_value("Content-Type").rfind("text/csv", 0) == 0);
  std::istringstream in(csv->body);
  auto exported = labels_from_csv(in);
  CHECK(exported.size() == 16);

  server.stop();
  loop.join();

  auto direct = agreement(sent);
  auto via_http = agreement(exported);
  CHECK(direct.pooled.n_items == via_http.pooled.n_items);
  CHECK(direct.pooled.pairwise == via_http.pooled.pairwise);
  CHECK(direct.pooled.fleiss == via_http.pooled.fleiss);
  CHECK(human_eval_summary(sent).at("m1").labels == human_eval_summary(exported).at("m1").labels);

  // Labels survive a restart.
  LabelStore reopened(s.store_path());
  CHECK(reopened.rows().size() == 16);
}

TEST_CASE("the server refuses a port that is already taken") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService service(s.corpus, s.predictions, s.plan, store);
  ServeOptions opts;
  opts.port = 0;
  JudgmentServer first(service, opts);
  ServeOptions clash;
  clash.port = first.port();
  CHECK_THROWS_AS(JudgmentServer(service, clash), Error);
}

TEST_CASE("a UI directory is served at the root") {
  Setup s;
  LabelStore store(s.store_path());
  JudgmentService service(s.corpus, s.predictions, s.plan, store);
  std::filesystem::create_directories(s.dir / "ui");
  mtest::write_file(s.dir / "ui" / "index.html", "<!doctype html><p>judge</p>");
  ServeOptions opts;
  opts.port = 0;
  opts.ui_dir = s.dir / "ui";
  JudgmentServer server(service, opts);
  std::thread loop([&] { server.run(); });
  httplib::Client client("127.0.0.1", server.port());
  auto page = client.Get("/");
  auto api = client.Get("/api/progress");
  server.stop();
  loop.join();
  REQUIRE(page);
  CHECK(page->body.find("judge") != std::string::npos);
  REQUIRE(api);
  CHECK(api->status == 200);

  ServeOptions missing;
  missing.port = 0;
  missing.ui_dir = s.dir / "no-such-dir";
  CHECK_THROWS_AS(JudgmentServer(service, missing), Error);
}
