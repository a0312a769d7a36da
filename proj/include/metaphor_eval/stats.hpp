// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaphor_eval/error.hpp"

namespace metaphor_eval {

// ---------------------------------------------------------------------------
// Agreement and correlation primitives. All throw std::invalid_argument on
// violated preconditions.

double cohens_kappa(std::span<const bool> a, std::span<const bool> b);
double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

// `table[i][j]` is the number of raters that put item i in category j.
double fleiss_kappa(const std::vector<std::vector<int>>& table, int raters_per_item);

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n - 2 degrees of freedom
  std::size_t n = 0;
};

PearsonResult pearson_test(std::span<const double> x, std::span<const double> y);
inline double pearson(std::span<const double> x, std::span<const double> y) {
  return pearson_test(x, y).r;
}

// ---------------------------------------------------------------------------
// Human judgments

enum class JudgmentMetric { fluency, creativity, primary_concept_consistency, consistency };

inline constexpr std::array<JudgmentMetric, 4> kJudgmentMetrics{
    JudgmentMetric::fluency, JudgmentMetric::creativity,
    JudgmentMetric::primary_concept_consistency, JudgmentMetric::consistency};

std::string_view to_string(JudgmentMetric m);

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// "2026-10-14T03:52:00.125Z"; parsing also accepts whole seconds and a
// numeric UTC offset.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view s);

struct JudgmentLabel {
  std::string video_id;
  std::string model_id;
  std::string annotator_id;
  bool fluency = false;
  bool creativity = false;
  bool primary_concept_consistency = false;
  bool consistency = false;
  Timestamp timestamp{};

  bool get(JudgmentMetric m) const;
  bool operator==(const JudgmentLabel&) const = default;
};

// CSV with header
// video_id,model_id,annotator_id,fluency,creativity,pcc,consistency,timestamp
// Booleans are written as 1/0; reading also accepts true/false and yes/no.
std::string labels_csv_header();
std::string label_csv_row(const JudgmentLabel& label);
std::string labels_to_csv(std::span<const JudgmentLabel> labels);
std::vector<JudgmentLabel> labels_from_csv(std::istream& in);
std::vector<JudgmentLabel> load_labels_csv(const std::filesystem::path& path);

// Keeps the latest label per (video, model, annotator); rows come out sorted
// by that key.
std::vector<JudgmentLabel> latest_labels(std::span<const JudgmentLabel> labels);

struct MetricProportions {
  std::array<double, 4> positive{};  // indexed like kJudgmentMetrics
  std::size_t labels = 0;
};

// Per model, share of positive labels for each metric.
std::map<std::string, MetricProportions> human_eval_summary(std::span<const JudgmentLabel> labels);

// Items are (video, model) pairs. Labels for the same item from one
// annotator must be unique (call latest_labels first otherwise).
struct AlignedLabels {
  std::vector<std::pair<std::string, std::string>> items;
  std::vector<bool> a, b;
};

// Items labeled by both annotators. With `metric` unset, all four metrics
// are pooled: each (item, metric) counts once.
AlignedLabels overlap(std::span<const JudgmentLabel> labels, std::string_view annotator_a,
                      std::string_view annotator_b, std::optional<JudgmentMetric> metric);

// Category-count table for Fleiss over the items labeled by every one of
// `annotators`. Columns are {negative, positive}.
std::vector<std::vector<int>> fleiss_table(std::span<const JudgmentLabel> labels,
                                           std::span<const std::string> annotators,
                                           std::optional<JudgmentMetric> metric);

struct AgreementReport {
  std::map<std::pair<std::string, std::string>, double> pairwise;  // both orders
  std::map<std::pair<std::string, std::string>, std::size_t> pairwise_items;
  std::optional<double> fleiss;  // unset when no item has every annotator
  std::size_t n_items = 0;       // items that entered the Fleiss table

  double kappa(const std::string& a, const std::string& b) const { return pairwise.at({a, b}); }
};

struct AgreementSummary {
  std::vector<std::string> annotators;
  std::map<JudgmentMetric, AgreementReport> per_metric;
  AgreementReport pooled;
};

// Annotator pairs with no overlap, or with an undefined kappa, are left out
// of `pairwise`.
AgreementSummary agreement(std::span<const JudgmentLabel> labels);

// Pairs each (video, model) contribution with the mean creativity label over
// the annotators who judged it. Items without both sides are skipped.
struct CorrelationInput {
  std::vector<std::pair<std::string, std::string>> items;
  std::vector<double> acd;
  std::vector<double> creativity;
};

CorrelationInput correlation_input(
    const std::map<std::pair<std::string, std::string>, double>& contributions,
    std::span<const JudgmentLabel> labels);

}  // namespace metaphor_eval
