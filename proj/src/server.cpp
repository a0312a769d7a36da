// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/server.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include <httplib.h>
#include <json.hpp>

namespace metaphor_eval {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

Timestamp now_ms() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

JudgmentService::Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

// ---------------------------------------------------------------------------
// LabelStore

std::string label_to_json_line(const JudgmentLabel& l) {
  json j{{"video_id", l.video_id},
         {"model_id", l.model_id},
         {"annotator_id", l.annotator_id},
         {"fluency", l.fluency},
         {"creativity", l.creativity},
         {"pcc", l.primary_concept_consistency},
         {"consistency", l.consistency},
         {"timestamp", format_timestamp(l.timestamp)}};
  return j.dump();
}

JudgmentLabel label_from_json_line(std::string_view line, std::size_t line_no) {
  try {
    auto j = json::parse(line);
    JudgmentLabel l;
    l.video_id = j.at("video_id").get<std::string>();
    l.model_id = j.at("model_id").get<std::string>();
    l.annotator_id = j.at("annotator_id").get<std::string>();
    l.fluency = j.at("fluency").get<bool>();
    l.creativity = j.at("creativity").get<bool>();
    l.primary_concept_consistency = j.at("pcc").get<bool>();
    l.consistency = j.at("consistency").get<bool>();
    l.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    return l;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad label record: ") + e.what(), line_no);
  } catch (const DataError& e) {
    throw DataError(e.what(), line_no);
  }
}

LabelStore::LabelStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    if (!in) throw Error("cannot read label store " + path_.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto l = label_from_json_line(line, line_no);
      Key key{l.video_id, l.model_id, l.annotator_id};
      auto it = latest_.find(key);
      if (it == latest_.end() || l.timestamp >= it->second.timestamp) latest_[key] = std::move(l);
    }
  }
  std::ofstream probe(path_, std::ios::app);
  if (!probe) throw Error("label store is not writable: " + path_.string());
}

JudgmentLabel LabelStore::put(JudgmentLabel label) {
  std::lock_guard lock(mu_);
  Key key{label.video_id, label.model_id, label.annotator_id};
  if (auto it = latest_.find(key); it != latest_.end() && label.timestamp <= it->second.timestamp)
    label.timestamp = it->second.timestamp + std::chrono::milliseconds(1);

  std::ofstream out(path_, std::ios::app);
  out << label_to_json_line(label) << '\n';
  out.flush();
  if (!out) throw Error("failed to append to label store " + path_.string());
  latest_[key] = label;
  return label;
}

std::vector<JudgmentLabel> LabelStore::rows() const {
  std::lock_guard lock(mu_);
  std::vector<JudgmentLabel> out;
  out.reserve(latest_.size());
  for (const auto& [key, l] : latest_) out.push_back(l);
  return out;
}

std::optional<JudgmentLabel> LabelStore::find(const std::string& video, const std::string& model,
                                              const std::string& annotator) const {
  std::lock_guard lock(mu_);
  auto it = latest_.find(Key{video, model, annotator});
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelStore::size() const {
  std::lock_guard lock(mu_);
  return latest_.size();
}

// ---------------------------------------------------------------------------
// JudgmentService

JudgmentService::JudgmentService(const Corpus& corpus, std::span<const PredictionSet> predictions,
                                 AssignmentPlan plan, LabelStore& store, bool blind)
    : plan_(std::move(plan)), store_(store), blind_(blind) {
  // model -> lowest run
  std::map<std::string, const PredictionSet*> first_run;
  for (const auto& p : predictions) {
    auto& slot = first_run[p.model_id];
    if (!slot || p.run_id < slot->run_id) slot = &p;
  }

  std::map<std::string, std::size_t> video_order;
  for (const auto& video : plan_.all_videos()) {
    const auto* record = corpus.find(video);
    if (!record) throw DataError("assignment plan names unknown video '" + video + "'");
    video_order.emplace(video, video_order.size());
    for (const auto& [model, set] : first_run) {
      auto it = set->items.find(video);
      if (it == set->items.end()) continue;
      Task t;
      t.video_id = video;
      t.model_id = model;
      t.caption = it->second;
      t.video_url = record->source_url;
      char buf[17];
      std::uint64_t h = fnv1a(model, fnv1a(std::string(1, '\0') + video, fnv1a(std::to_string(plan_.seed))));
      do {
        std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
        ++h;
      } while (by_id_.count(buf));
      t.id = buf;
      by_id_.emplace(t.id, tasks_.size());
      by_key_.emplace(std::make_pair(t.video_id, t.model_id), tasks_.size());
      tasks_.push_back(std::move(t));
    }
  }

  for (const auto& annotator : plan_.annotators) {
    const auto& videos = plan_.per_annotator.at(annotator);
    std::set<std::string> mine(videos.begin(), videos.end());
    auto& queue = queue_[annotator];
    for (std::size_t i = 0; i < tasks_.size(); ++i)
      if (mine.count(tasks_[i].video_id)) queue.push_back(i);
    if (blind_) {
      // Interleave models so queue position says nothing about the source.
      std::mt19937_64 rng(plan_.seed ^ fnv1a(annotator));
      std::shuffle(queue.begin(), queue.end(), rng);
    }
  }
}

std::vector<const Task*> JudgmentService::tasks_for(std::string_view annotator) const {
  std::vector<const Task*> out;
  auto it = queue_.find(annotator);
  if (it == queue_.end()) return out;
  for (auto i : it->second) out.push_back(&tasks_[i]);
  return out;
}

std::pair<std::size_t, std::size_t> JudgmentService::counts(std::string_view annotator) const {
  std::size_t labeled = 0, assigned = 0;
  const std::string who(annotator);
  for (const auto* t : tasks_for(annotator)) {
    ++assigned;
    if (store_.find(t->video_id, t->model_id, who)) ++labeled;
  }
  return {labeled, assigned};
}

std::string JudgmentService::task_json(const Task& t, std::string_view annotator) const {
  json j{{"task_id", t.id},
         {"video_id", t.video_id},
         {"video_url", t.video_url},
         {"caption", t.caption},
         {"blind", blind_}};
  if (!blind_) j["model_id"] = t.model_id;
  if (!annotator.empty() && queue_.count(annotator)) {
    auto [labeled, assigned] = counts(annotator);
    j["progress"] = {{"labeled", labeled}, {"assigned", assigned}};
  }
  return j.dump();
}

JudgmentService::Response JudgmentService::next_task(std::string_view annotator) const {
  if (annotator.empty()) return error_response(400, "missing annotator");
  if (!queue_.count(annotator)) return error_response(404, "unknown annotator '" + std::string(annotator) + "'");
  const std::string who(annotator);
  for (const auto* t : tasks_for(annotator))
    if (!store_.find(t->video_id, t->model_id, who)) return {200, task_json(*t, annotator)};
  auto [labeled, assigned] = counts(annotator);
  return {200, json{{"done", true}, {"progress", {{"labeled", labeled}, {"assigned", assigned}}}}.dump()};
}

JudgmentService::Response JudgmentService::task(std::string_view task_id, std::string_view annotator) const {
  auto it = by_id_.find(task_id);
  if (it == by_id_.end()) return error_response(404, "unknown task '" + std::string(task_id) + "'");
  return {200, task_json(tasks_[it->second], annotator)};
}

JudgmentService::Response JudgmentService::submit(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    return error_response(400, "body is not valid JSON");
  }
  if (!j.is_object()) return error_response(400, "body must be a JSON object");

  auto text = [&j](const char* name) -> std::optional<std::string> {
    if (!j.contains(name) || !j[name].is_string()) return std::nullopt;
    return j[name].get<std::string>();
  };
  auto annotator = text("annotator_id");
  if (!annotator || annotator->empty()) return error_response(400, "missing annotator_id");
  if (!queue_.count(*annotator)) return error_response(404, "unknown annotator '" + *annotator + "'");

  const Task* task = nullptr;
  if (auto id = text("task_id")) {
    auto it = by_id_.find(*id);
    if (it == by_id_.end()) return error_response(404, "unknown task '" + *id + "'");
    task = &tasks_[it->second];
  } else {
    auto video = text("video_id"), model = text("model_id");
    if (!video || !model) return error_response(400, "need task_id or video_id and model_id");
    auto it = by_key_.find({*video, *model});
    if (it == by_key_.end()) return error_response(404, "no task for " + *video + "/" + *model);
    task = &tasks_[it->second];
  }
  const auto& mine = queue_.at(*annotator);
  if (std::none_of(mine.begin(), mine.end(), [&](std::size_t i) { return &tasks_[i] == task; }))
    return error_response(403, *annotator + " is not assigned video " + task->video_id);

  JudgmentLabel label;
  label.video_id = task->video_id;
  label.model_id = task->model_id;
  label.annotator_id = *annotator;
  struct Field {
    const char* name;
    bool* target;
  };
  for (auto [name, target] : {Field{"fluency", &label.fluency}, Field{"creativity", &label.creativity},
                              Field{"pcc", &label.primary_concept_consistency},
                              Field{"consistency", &label.consistency}}) {
    if (!j.contains(name) || !j[name].is_boolean())
      return error_response(400, std::string("field '") + name + "' must be a boolean");
    *target = j[name].get<bool>();
  }
  label.timestamp = now_ms();

  try {
    label = store_.put(std::move(label));
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
  auto [labeled, assigned] = counts(*annotator);
  return {200, json{{"ok", true},
                    {"task_id", task->id},
                    {"timestamp", format_timestamp(label.timestamp)},
                    {"progress", {{"labeled", labeled}, {"assigned", assigned}}}}
                   .dump()};
}

JudgmentService::Response JudgmentService::progress(std::string_view annotator) const {
  if (!annotator.empty()) {
    if (!queue_.count(annotator)) return error_response(404, "unknown annotator '" + std::string(annotator) + "'");
    auto [labeled, assigned] = counts(annotator);
    return {200, json{{"annotator", std::string(annotator)}, {"labeled", labeled}, {"assigned", assigned}}.dump()};
  }
  json list = json::array();
  for (const auto& a : plan_.annotators) {
    auto [labeled, assigned] = counts(a);
    list.push_back({{"annotator", a}, {"labeled", labeled}, {"assigned", assigned}});
  }
  return {200, json{{"annotators", list}, {"labels", store_.size()}}.dump()};
}

JudgmentService::Response JudgmentService::export_csv() const {
  auto rows = store_.rows();
  return {200, labels_to_csv(rows), "text/csv"};
}

// ---------------------------------------------------------------------------
// JudgmentServer

struct JudgmentServer::Impl {
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const JudgmentService::Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

constexpr const char* kIndexPage =
    "<!doctype html><title>metaphor-eval judgments</title>"
    "<p>Judgment API: GET /api/tasks/next?annotator=ID, GET /api/tasks/{id}, POST /api/labels, "
    "GET /api/progress, GET /api/export.csv</p>";

}  // namespace

JudgmentServer::JudgmentServer(JudgmentService& service, ServeOptions options)
    : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  // The library default sets SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  svr.Get("/api/tasks/next", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.next_task(req.has_param("annotator") ? req.get_param_value("annotator") : ""));
  });
  svr.Get(R"(/api/tasks/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.task(req.matches[1].str(),
                            req.has_param("annotator") ? req.get_param_value("annotator") : ""));
  });
  svr.Post("/api/labels", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.submit(req.body));
  });
  svr.Get("/api/progress", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.progress(req.has_param("annotator") ? req.get_param_value("annotator") : ""));
  });
  svr.Get("/api/export.csv", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.export_csv());
  });

  if (options.ui_dir) {
    if (!svr.set_mount_point("/", options.ui_dir->string()))
      throw Error("UI directory not found: " + options.ui_dir->string());
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kIndexPage, "text/html");
    });
  }

  if (options.port == 0) {
    port_ = svr.bind_to_any_port(options.host);
    if (port_ < 0) throw Error("cannot bind " + options.host);
  } else {
    if (!svr.bind_to_port(options.host, options.port))
      throw Error("cannot bind " + options.host + ":" + std::to_string(options.port) +
                  " (port in use?)");
    port_ = options.port;
  }
}

JudgmentServer::~JudgmentServer() { stop(); }

void JudgmentServer::run() { impl_->server.listen_after_bind(); }

void JudgmentServer::stop() { impl_->server.stop(); }

}  // namespace metaphor_eval
