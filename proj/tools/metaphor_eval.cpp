// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

// metaphor-eval: corpus checks, caption metrics, agreement statistics and
// the judgment-collection server.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaphor_eval/corpus.hpp"
#include "metaphor_eval/embed.hpp"
#include "metaphor_eval/runner.hpp"
#include "metaphor_eval/semantic.hpp"
#include "metaphor_eval/server.hpp"
#include "metaphor_eval/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metaphor_eval;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + out_path);
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fmt(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<PredictionSet> load_prediction_specs(const std::vector<std::string>& specs) {
  std::vector<PredictionSet> sets;
  for (const auto& s : specs) {
    auto src = parse_prediction_source(s);
    sets.push_back(load_predictions(src.path, src.model_id, src.run_id));
  }
  return sets;
}

json histogram_json(const Histogram& h) {
  json bins = json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    bins.push_back({{"from", h.bin_width * static_cast<double>(i)},
                    {"to", h.bin_width * static_cast<double>(i + 1)},
                    {"count", h.counts[i]}});
  return bins;
}

JudgmentServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

// --- validate --------------------------------------------------------------

struct ValidateArgs {
  std::string corpus, annotations;
  std::vector<std::string> predictions;
};

int run_validate(const ValidateArgs& a) {
  auto corpus = load_corpus(a.corpus);
  auto v = corpus.video_counts();
  auto c = corpus.caption_counts();
  std::cout << "corpus: " << corpus.size() << " videos, " << c.total() << " captions\n"
            << "  train " << v.train << " videos / " << c.train << " captions\n"
            << "  val   " << v.val << " videos / " << c.val << " captions\n"
            << "  test  " << v.test << " videos / " << c.test << " captions\n";
  if (!a.annotations.empty()) {
    auto records = load_annotations(a.annotations);
    auto kept = unanimity_filter(records);
    std::cout << "annotations: " << records.size() << " records, " << kept.size()
              << " videos marked metaphoric by all three annotators\n";
    std::size_t absent = 0;
    for (const auto& id : kept) absent += corpus.find(id) == nullptr;
    if (absent) std::cout << "WARN " << absent << " unanimous videos are not in the corpus\n";
    for (const auto& w : brand_warnings(records))
      std::cout << "WARN brand token '" << w.token << "' in " << w.video_id << " (annotator "
                << w.annotator_id << ")\n";
  }
  for (const auto& set : load_prediction_specs(a.predictions)) {
    check_predictions(corpus, set);
    std::cout << "predictions " << set.model_id << " run " << set.run_id << ": " << set.items.size()
              << " of " << v.test << " test videos\n";
  }
  return 0;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string corpus, format = "text", out;
  double duration_bin = 10.0, length_bin = 1.0;
};

int run_stats(const StatsArgs& a) {
  auto corpus = load_corpus(a.corpus);
  auto s = corpus_stats(corpus, {a.duration_bin, a.length_bin});
  if (a.format == "json") {
    json j{{"videos", s.videos},
           {"captions", s.captions},
           {"mean_duration_s", s.mean_duration_s},
           {"mean_caption_len_words", s.mean_caption_len_words},
           {"duration_histogram", histogram_json(s.duration_histogram)},
           {"length_histogram", histogram_json(s.length_histogram)}};
    emit(j.dump(2) + "\n", a.out);
    return 0;
  }
  std::ostringstream out;
  out << "videos: " << s.videos << "\ncaptions: " << s.captions
      << "\nmean duration: " << fmt(s.mean_duration_s, 2) << " s"
      << "\nmean caption length: " << fmt(s.mean_caption_len_words, 2) << " words\n";
  auto dump = [&out](const char* title, const Histogram& h, const char* unit) {
    out << title << " (bin " << fmt(h.bin_width, 1) << unit << "):\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      if (h.counts[i])
        out << "  [" << fmt(h.bin_width * i, 1) << ", " << fmt(h.bin_width * (i + 1), 1) << ") "
            << h.counts[i] << "\n";
  };
  dump("duration histogram", s.duration_histogram, " s");
  dump("caption length histogram", s.length_histogram, " words");
  emit(out.str(), a.out);
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string corpus, provider = "test:0", out, format = "md", metrics, audit_dir, replay;
  std::vector<std::string> predictions;
  bool bleu_smooth = false, cider_d = false, bertscore_idf = false, clamp_cs = true;
  double rescale = 0.0;
  bool rescale_set = false;
  std::size_t concurrency = 8;
  int timeout_ms = 10000, retries = 2;
};

int run_eval(const EvalArgs& a) {
  auto format = parse_format(a.format);
  if (!format) throw Error("unknown format '" + a.format + "'");

  if (!a.replay.empty()) {
    auto reports = reports_from_json(read_file(a.replay));
    emit(render(reports, *format), a.out);
    return 0;
  }

  JobConfig config;
  config.corpus = a.corpus;
  for (const auto& p : a.predictions) config.predictions.push_back(parse_prediction_source(p));
  config.provider = a.provider;
  config.flags.bleu_smooth = a.bleu_smooth;
  config.flags.cider_d = a.cider_d;
  config.flags.bertscore_idf = a.bertscore_idf;
  config.flags.clamp_cs = a.clamp_cs;
  if (a.rescale_set) config.flags.bertscore_rescale = a.rescale;
  config.format = *format;
  config.concurrency = a.concurrency;
  if (!a.audit_dir.empty()) config.audit_dir = a.audit_dir;
  if (!a.metrics.empty()) {
    config.metrics.clear();
    for (const auto& m : split_list(a.metrics)) {
      if (m == "bleu4") config.metrics.insert(MetricGroup::bleu4);
      else if (m == "rouge_l") config.metrics.insert(MetricGroup::rouge_l);
      else if (m == "cider") config.metrics.insert(MetricGroup::cider);
      else if (m == "bertscore") config.metrics.insert(MetricGroup::bertscore);
      else if (m == "acd" || m == "creativity") config.metrics.insert(MetricGroup::creativity);
      else throw Error("unknown metric '" + m + "'");
    }
  }

  RemoteOptions remote;
  remote.timeout = std::chrono::milliseconds(a.timeout_ms);
  remote.retries = a.retries;
  remote.max_in_flight = a.concurrency;
  validate(config);
  auto provider = make_provider(config.provider, remote);
  auto eval = evaluate(config, provider);
  for (const auto& w : eval.warnings) std::cerr << "WARN " << w << "\n";
  emit(render(eval.reports, config.format, eval.warnings), a.out);
  return 0;
}

// --- iaa / correlate -------------------------------------------------------

struct IaaArgs {
  std::string labels, format = "md", out;
};

int run_iaa(const IaaArgs& a) {
  auto labels = latest_labels(load_labels_csv(a.labels));
  auto summary = agreement(labels);
  auto props = human_eval_summary(labels);

  auto fleiss_text = [](const AgreementReport& r) {
    return r.fleiss ? fmt(*r.fleiss) : std::string("n/a");
  };

  if (a.format == "json") {
    auto report_json = [](const AgreementReport& r, const std::vector<std::string>& names) {
      json pairs = json::array();
      for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
          if (auto it = r.pairwise.find({names[i], names[j]}); it != r.pairwise.end())
            pairs.push_back({{"a", names[i]},
                             {"b", names[j]},
                             {"kappa", it->second},
                             {"items", r.pairwise_items.at({names[i], names[j]})}});
      return json{{"pairwise", pairs},
                  {"fleiss", r.fleiss ? json(*r.fleiss) : json(nullptr)},
                  {"n_items", r.n_items}};
    };
    json j;
    j["annotators"] = summary.annotators;
    j["pooled"] = report_json(summary.pooled, summary.annotators);
    for (const auto& [m, r] : summary.per_metric)
      j["per_metric"][std::string(to_string(m))] = report_json(r, summary.annotators);
    for (const auto& [model, p] : props) {
      json row{{"labels", p.labels}};
      for (std::size_t i = 0; i < kJudgmentMetrics.size(); ++i)
        row[std::string(to_string(kJudgmentMetrics[i]))] = p.positive[i];
      j["human_eval"][model] = row;
    }
    emit(j.dump(2) + "\n", a.out);
    return 0;
  }

  std::ostringstream out;
  const auto& names = summary.annotators;
  out << "| Pairwise Comparison | Cohen's Kappa (pooled) |";
  for (auto m : kJudgmentMetrics) out << ' ' << to_string(m) << " |";
  out << "\n|:---|---:|";
  for (std::size_t i = 0; i < kJudgmentMetrics.size(); ++i) out << "---:|";
  out << "\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      auto cell = [&](const AgreementReport& r) {
        auto it = r.pairwise.find({names[i], names[j]});
        return it == r.pairwise.end() ? std::string("n/a") : fmt(it->second);
      };
      out << "| " << names[i] << " vs " << names[j] << " | " << cell(summary.pooled) << " |";
      for (auto m : kJudgmentMetrics) out << ' ' << cell(summary.per_metric.at(m)) << " |";
      out << "\n";
    }
  }
  out << "| **Overall Fleiss' Kappa** | " << fleiss_text(summary.pooled) << " |";
  for (auto m : kJudgmentMetrics) out << ' ' << fleiss_text(summary.per_metric.at(m)) << " |";
  out << "\n\n| Model | Labels |";
  for (auto m : kJudgmentMetrics) out << ' ' << to_string(m) << " |";
  out << "\n|:---|---:|";
  for (std::size_t i = 0; i < kJudgmentMetrics.size(); ++i) out << "---:|";
  out << "\n";
  for (const auto& [model, p] : props) {
    out << "| " << model << " | " << p.labels << " |";
    for (double v : p.positive) out << ' ' << fmt(v, 2) << " |";
    out << "\n";
  }
  emit(out.str(), a.out);
  return 0;
}

struct CorrelateArgs {
  std::string labels, out;
  std::vector<std::string> acd;
};

int run_correlate(const CorrelateArgs& a) {
  // Runs of the same model are averaged per video.
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums;
  for (const auto& spec : a.acd) {
    auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0) throw Error("--acd expects MODEL:PATH, got '" + spec + "'");
    auto model = spec.substr(0, colon);
    auto report = acd_report_from_json(read_file(spec.substr(colon + 1)));
    for (const auto& row : report.per_caption) {
      auto& s = sums[{row.video_id, model}];
      s.first += row.contribution;
      ++s.second;
    }
  }
  std::map<std::pair<std::string, std::string>, double> contributions;
  for (const auto& [key, s] : sums) contributions[key] = s.first / s.second;

  auto input = correlation_input(contributions, load_labels_csv(a.labels));
  auto result = pearson_test(input.acd, input.creativity);
  json j{{"n", result.n}, {"pearson_r", result.r}, {"p_value", result.p_value}};
  emit(j.dump(2) + "\n", a.out);
  return 0;
}

// --- assign / serve --------------------------------------------------------

struct PlanArgs {
  std::string corpus, videos, annotators = "A,B,C", plan;
  std::size_t per_annotator = 50, shared = 25;
  std::uint64_t seed = 0;
};

AssignmentPlan build_plan(const PlanArgs& a, const Corpus* corpus) {
  if (!a.plan.empty()) return plan_from_json(read_file(a.plan));
  std::vector<std::string> videos;
  if (!a.videos.empty()) {
    std::istringstream in(read_file(a.videos));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line.back() == '\r') line.pop_back(), videos.push_back(line);
      else if (!line.empty()) videos.push_back(line);
  } else if (corpus) {
    videos = corpus->ids(Split::test);
  } else {
    throw Error("assign needs --corpus or --videos");
  }
  return assign(videos, split_list(a.annotators), a.per_annotator, a.shared, a.seed);
}

int run_assign(const PlanArgs& a, const std::string& out) {
  std::optional<Corpus> corpus;
  if (!a.corpus.empty()) corpus = load_corpus(a.corpus);
  emit(plan_to_json(build_plan(a, corpus ? &*corpus : nullptr)), out);
  return 0;
}

struct ServeArgs {
  PlanArgs plan;
  std::vector<std::string> predictions;
  std::string store, host = "127.0.0.1", ui_dir;
  int port = 8080;
  bool blind = true;
};

int run_serve(const ServeArgs& a) {
  auto corpus = load_corpus(a.plan.corpus);
  auto sets = load_prediction_specs(a.predictions);
  for (const auto& s : sets) check_predictions(corpus, s);
  auto plan = build_plan(a.plan, &corpus);

  std::string store_path = a.store;
  if (store_path.empty())
    if (const char* env = std::getenv("METAPHOR_EVAL_STORE")) store_path = env;
  if (store_path.empty()) store_path = "labels.jsonl";

  LabelStore store(store_path);
  JudgmentService service(corpus, sets, plan, store, a.blind);
  ServeOptions options;
  options.host = a.host;
  options.port = a.port;
  if (!a.ui_dir.empty()) options.ui_dir = a.ui_dir;
  JudgmentServer server(service, options);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << service.tasks().size() << " tasks on http://" << a.host << ':'
            << server.port() << " (store " << store_path << ", " << (a.blind ? "blind" : "unblinded")
            << ")" << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

// --- plan-frames -----------------------------------------------------------

struct FramesArgs {
  std::string corpus, out;
  double duration = 0.0;
  int clips = 0;
  double first = 1.0 / 3.0, second = 2.0 / 3.0;
};

int run_plan_frames(const FramesArgs& a) {
  auto strategy = a.clips == 0 ? FrameStrategy::three_segment() : FrameStrategy::clip_split(a.clips);
  FramePositions positions{a.first, a.second};
  auto plan_json = [&](double duration) {
    auto plan = plan_frames(duration, strategy, positions);
    return json{{"duration_s", duration},
                {"strategy", a.clips == 0 ? "three_segment" : "clip_split"},
                {"clips", plan.groups.size()},
                {"groups", plan.groups}};
  };
  json j;
  if (!a.corpus.empty()) {
    auto corpus = load_corpus(a.corpus);
    j = json::array();
    for (const auto& v : corpus.videos()) {
      auto entry = plan_json(v.duration_s);
      entry["video_id"] = v.video_id;
      j.push_back(entry);
    }
  } else {
    j = plan_json(a.duration);
  }
  emit(j.dump(2) + "\n", a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate templated video metaphor captions"};
  app.require_subcommand(1);

  ValidateArgs va;
  auto* validate_cmd = app.add_subcommand("validate", "Check corpus, annotation and prediction files");
  validate_cmd->add_option("--corpus", va.corpus, "corpus.jsonl")->required();
  validate_cmd->add_option("--annotations", va.annotations, "annotations.jsonl");
  validate_cmd->add_option("--predictions", va.predictions, "model:run:path (repeatable)");

  StatsArgs sa;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus duration and caption-length statistics");
  stats_cmd->add_option("--corpus", sa.corpus)->required();
  stats_cmd->add_option("--duration-bin", sa.duration_bin, "seconds per duration bin")->capture_default_str();
  stats_cmd->add_option("--length-bin", sa.length_bin, "words per length bin")->capture_default_str();
  stats_cmd->add_option("--format", sa.format, "text|json")->capture_default_str();
  stats_cmd->add_option("--out", sa.out);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score prediction files and render a report");
  eval_cmd->add_option("--corpus", ea.corpus);
  eval_cmd->add_option("--predictions", ea.predictions, "model:run:path (repeatable)");
  eval_cmd->add_option("--provider", ea.provider, "file:PATH | http:URL | test:SEED[:DIM]")->capture_default_str();
  eval_cmd->add_option("--out", ea.out);
  eval_cmd->add_option("--format", ea.format, "md|csv|json")->capture_default_str();
  eval_cmd->add_option("--metrics", ea.metrics, "comma list of bleu4,rouge_l,cider,bertscore,acd");
  eval_cmd->add_flag("--bleu-smooth", ea.bleu_smooth, "add-epsilon BLEU smoothing");
  eval_cmd->add_flag("--cider-d", ea.cider_d, "use CIDEr-D");
  eval_cmd->add_flag("--bertscore-idf", ea.bertscore_idf, "IDF-weighted BERTScore");
  eval_cmd->add_option("--bertscore-rescale", ea.rescale, "baseline for BERTScore rescaling")
      ->each([&ea](const std::string&) { ea.rescale_set = true; });
  eval_cmd->add_flag("--clamp-cs,!--no-clamp-cs", ea.clamp_cs, "clamp concept similarity to [0,1]");
  eval_cmd->add_option("--concurrency", ea.concurrency)->capture_default_str();
  eval_cmd->add_option("--audit-dir", ea.audit_dir, "write per-caption ACD audits here");
  eval_cmd->add_option("--replay", ea.replay, "re-render a JSON report");
  eval_cmd->add_option("--timeout-ms", ea.timeout_ms, "remote provider timeout")->capture_default_str();
  eval_cmd->add_option("--retries", ea.retries, "remote provider retries")->capture_default_str();

  IaaArgs ia;
  auto* iaa_cmd = app.add_subcommand("iaa", "Inter-annotator agreement and human-eval summary");
  iaa_cmd->add_option("--labels", ia.labels, "labels CSV")->required();
  iaa_cmd->add_option("--format", ia.format, "md|json")->capture_default_str();
  iaa_cmd->add_option("--out", ia.out);

  CorrelateArgs ca;
  auto* corr_cmd = app.add_subcommand("correlate", "Pearson correlation of ACD with creativity labels");
  corr_cmd->add_option("--labels", ca.labels)->required();
  corr_cmd->add_option("--acd", ca.acd, "MODEL:ACD_AUDIT_JSON (repeatable)")->required();
  corr_cmd->add_option("--out", ca.out);

  PlanArgs pa;
  std::string assign_out;
  auto* assign_cmd = app.add_subcommand("assign", "Plan which videos each annotator labels");
  assign_cmd->add_option("--corpus", pa.corpus, "use the test split of this corpus");
  assign_cmd->add_option("--videos", pa.videos, "file with one video id per line");
  assign_cmd->add_option("--annotators", pa.annotators)->capture_default_str();
  assign_cmd->add_option("--per-annotator", pa.per_annotator)->capture_default_str();
  assign_cmd->add_option("--shared", pa.shared)->capture_default_str();
  assign_cmd->add_option("--seed", pa.seed)->capture_default_str();
  assign_cmd->add_option("--out", assign_out);

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the judgment-collection API");
  serve_cmd->add_option("--corpus", sv.plan.corpus)->required();
  serve_cmd->add_option("--predictions", sv.predictions, "model:run:path (repeatable)")->required();
  serve_cmd->add_option("--plan", sv.plan.plan, "assignment plan JSON from `assign`");
  serve_cmd->add_option("--annotators", sv.plan.annotators)->capture_default_str();
  serve_cmd->add_option("--per-annotator", sv.plan.per_annotator)->capture_default_str();
  serve_cmd->add_option("--shared", sv.plan.shared)->capture_default_str();
  serve_cmd->add_option("--seed", sv.plan.seed)->capture_default_str();
  serve_cmd->add_option("--store", sv.store, "label store (default $METAPHOR_EVAL_STORE or labels.jsonl)");
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port)->capture_default_str();
  serve_cmd->add_option("--ui-dir", sv.ui_dir, "static UI bundle served at /");
  serve_cmd->add_flag("--blind,!--no-blind", sv.blind, "hide model ids from annotators");

  FramesArgs fa;
  auto* frames_cmd = app.add_subcommand("plan-frames", "Frame timestamps for a duration or a corpus");
  frames_cmd->add_option("--duration", fa.duration, "video duration in seconds");
  frames_cmd->add_option("--corpus", fa.corpus, "plan every video in the corpus");
  frames_cmd->add_option("--clips", fa.clips, "clip split k (1,2,4,6); 0 for three segments")->capture_default_str();
  frames_cmd->add_option("--first", fa.first, "relative position of the first frame in a segment");
  frames_cmd->add_option("--second", fa.second, "relative position of the second frame in a segment");
  frames_cmd->add_option("--out", fa.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) return run_validate(va);
    if (*stats_cmd) return run_stats(sa);
    if (*eval_cmd) return run_eval(ea);
    if (*iaa_cmd) return run_iaa(ia);
    if (*corr_cmd) return run_correlate(ca);
    if (*assign_cmd) return run_assign(pa, assign_out);
    if (*serve_cmd) return run_serve(sv);
    if (*frames_cmd) return run_plan_frames(fa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
