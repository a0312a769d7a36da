// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaphor_eval/corpus.hpp"
#include "metaphor_eval/embed.hpp"
#include "metaphor_eval/semantic.hpp"

namespace metaphor_eval {

// Report columns, in display order.
enum class Column { bleu4, rouge_l, cider, bert_f1, acs, acd };

inline constexpr std::array<Column, 6> kColumns{Column::bleu4,   Column::rouge_l, Column::cider,
                                                Column::bert_f1, Column::acs,     Column::acd};

struct ColumnInfo {
  std::string_view key;     // JSON / CSV name
  std::string_view header;  // markdown header
  bool higher_is_better;
};

const ColumnInfo& column_info(Column c);
std::optional<Column> parse_column(std::string_view key);

struct ColumnValues {
  double mean = 0.0;
  std::vector<double> per_run;
};

struct MetricReport {
  std::string model_id;
  std::size_t runs = 0;
  std::map<Column, ColumnValues> columns;  // enabled columns only
  double coverage = 1.0;                   // lowest coverage over runs
  std::vector<std::string> missing_videos;
  ProviderDescriptor provider;

  // Throws std::logic_error unless every mean equals the mean of its runs.
  void check() const;
};

// Metric families that can be switched on or off. `bertscore` produces
// BERT-F1; `creativity` produces ACS and ACD (and needs BERTScore internally).
enum class MetricGroup { bleu4, rouge_l, cider, bertscore, creativity };

struct MetricFlags {
  bool bleu_smooth = false;
  bool cider_d = false;
  bool bertscore_idf = false;
  std::optional<double> bertscore_rescale;
  bool clamp_cs = true;
};

struct PredictionSource {
  std::string model_id;
  int run_id = 1;
  std::filesystem::path path;
};

// Parses "model:run:path".
PredictionSource parse_prediction_source(std::string_view spec);

enum class ReportFormat { markdown, csv, json };

std::optional<ReportFormat> parse_format(std::string_view s);

struct JobConfig {
  std::filesystem::path corpus;
  std::vector<PredictionSource> predictions;
  std::string provider = "test:0";
  MetricFlags flags;
  std::set<MetricGroup> metrics{MetricGroup::bleu4, MetricGroup::rouge_l, MetricGroup::cider,
                                MetricGroup::bertscore, MetricGroup::creativity};
  ReportFormat format = ReportFormat::markdown;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> audit_dir;
  std::size_t concurrency = 8;
};

// Throws Error describing the first problem.
void validate(const JobConfig& config);

struct EvalOptions {
  MetricFlags flags;
  std::set<MetricGroup> metrics{MetricGroup::bleu4, MetricGroup::rouge_l, MetricGroup::cider,
                                MetricGroup::bertscore, MetricGroup::creativity};
  std::size_t concurrency = 8;
};

struct Evaluation {
  std::vector<MetricReport> reports;  // sorted by ACD, best first
  std::vector<std::string> warnings;
  std::map<std::pair<std::string, int>, AcdReport> audits;  // (model, run)
};

// Scores every prediction set against the corpus test split and averages
// runs per model. Videos without a prediction are skipped with a warning.
Evaluation evaluate(const Corpus& corpus, std::span<const PredictionSet> predictions,
                    EmbeddingProvider& provider, const EvalOptions& options = {});

// Loads inputs named by the config and evaluates them. `provider` overrides
// config.provider when given.
Evaluation evaluate(const JobConfig& config, std::shared_ptr<EmbeddingProvider> provider = nullptr);

// Best value per column in bold, runner-up underlined; ranking uses the
// displayed (2-decimal) values so equal cells get equal markers.
std::string render_markdown(std::span<const MetricReport> reports,
                            std::span<const std::string> warnings = {});
std::string render_csv(std::span<const MetricReport> reports);
std::string render_json(std::span<const MetricReport> reports,
                        std::span<const std::string> warnings = {});
std::string render(std::span<const MetricReport> reports, ReportFormat format,
                   std::span<const std::string> warnings = {});

// Reads render_json output back; means are re-checked against per-run values.
std::vector<MetricReport> reports_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Human-evaluation assignment

struct AssignmentPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> annotators;
  std::vector<std::string> shared;
  // Per annotator: the shared block followed by a private block.
  std::map<std::string, std::vector<std::string>> per_annotator;

  std::vector<std::string> all_videos() const;  // shared first, then private blocks
};

// Throws std::invalid_argument when n_shared > n_per_annotator or when the
// plan needs more than videos.size() distinct videos.
AssignmentPlan assign(std::span<const std::string> videos, std::span<const std::string> annotators,
                      std::size_t n_per_annotator, std::size_t n_shared, std::uint64_t seed);

std::string plan_to_json(const AssignmentPlan& plan);
AssignmentPlan plan_from_json(std::string_view text);

}  // namespace metaphor_eval
