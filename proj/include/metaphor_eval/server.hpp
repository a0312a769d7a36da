// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "metaphor_eval/corpus.hpp"
#include "metaphor_eval/runner.hpp"
#include "metaphor_eval/stats.hpp"

namespace metaphor_eval {

// Append-only JSONL label log. Reading keeps the latest label per
// (video, model, annotator). One process owns the file at a time.
class LabelStore {
 public:
  // Replays an existing file; throws Error when the path is not writable.
  explicit LabelStore(std::filesystem::path path);

  // Appends and returns the stored label. Timestamps are forced to be
  // strictly later than the previous label for the same key.
  JudgmentLabel put(JudgmentLabel label);

  std::vector<JudgmentLabel> rows() const;  // latest per key, sorted by key
  std::optional<JudgmentLabel> find(const std::string& video, const std::string& model,
                                    const std::string& annotator) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<Key, JudgmentLabel> latest_;
};

std::string label_to_json_line(const JudgmentLabel& label);
JudgmentLabel label_from_json_line(std::string_view line, std::size_t line_no = 0);

struct Task {
  std::string id;  // opaque, does not reveal the model
  std::string video_id;
  std::string model_id;
  std::string caption;
  std::string video_url;
};

// HTTP-independent core of the judgment API. Every method returns the JSON
// body and an HTTP status.
class JudgmentService {
 public:
  struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
  };

  // Tasks pair each planned video with every model that predicted it; when a
  // model has several runs the lowest run id supplies the caption.
  JudgmentService(const Corpus& corpus, std::span<const PredictionSet> predictions,
                  AssignmentPlan plan, LabelStore& store, bool blind = true);

  Response next_task(std::string_view annotator) const;
  Response task(std::string_view task_id, std::string_view annotator = {}) const;
  Response submit(std::string_view body);
  Response progress(std::string_view annotator = {}) const;
  Response export_csv() const;

  std::span<const Task> tasks() const { return tasks_; }
  std::vector<const Task*> tasks_for(std::string_view annotator) const;
  bool blind() const { return blind_; }

 private:
  std::string task_json(const Task& t, std::string_view annotator) const;
  std::pair<std::size_t, std::size_t> counts(std::string_view annotator) const;

  AssignmentPlan plan_;
  LabelStore& store_;
  bool blind_;
  std::vector<Task> tasks_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::pair<std::string, std::string>, std::size_t> by_key_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> queue_;  // per annotator
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;
};

// Binds in the constructor; throws Error when the port is unavailable.
class JudgmentServer {
 public:
  JudgmentServer(JudgmentService& service, ServeOptions options);
  ~JudgmentServer();

  int port() const { return port_; }
  void run();   // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace metaphor_eval
