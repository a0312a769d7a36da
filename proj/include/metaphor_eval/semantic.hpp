// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaphor_eval/embed.hpp"
#include "metaphor_eval/template.hpp"

namespace metaphor_eval {

struct BertScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when either side produced no tokens; the scores are then 0.
  bool empty_input = false;
};

// Token IDF weights, log((M + 1) / (df + 1)) over M reference documents.
// Tokens never seen get log(M + 1).
class TokenIdf {
 public:
  TokenIdf() = default;
  static TokenIdf from_references(std::span<const std::vector<std::string>> token_docs);

  double weight(std::string_view token) const;
  bool empty() const { return docs_ == 0; }

 private:
  std::map<std::string, double, std::less<>> weights_;
  std::size_t docs_ = 0;
};

struct BertScoreOptions {
  const TokenIdf* idf = nullptr;  // null: uniform token weights
  // Rescale each score s to (s - baseline) / (1 - baseline).
  std::optional<double> rescale_baseline;
};

// Greedy token matching: P averages each hypothesis token's best cosine to
// the reference, R each reference token's best cosine to the hypothesis.
// P and R are floored at 0. With several references, the reference with the
// highest F1 wins (first one on ties).
BertScoreTriple bertscore(std::string_view hypothesis, std::span<const std::string> references,
                          EmbeddingProvider& tokens, const BertScoreOptions& options = {});

// Same computation on already-embedded tokens.
BertScoreTriple bertscore_tokens(std::span<const TokenEmbedding> hypothesis,
                                 std::span<const TokenEmbedding> reference,
                                 const BertScoreOptions& options = {});

struct ConceptScore {
  double cs = 1.0;
  bool penalty_applied = false;
  ParseStatus parse_status = ParseStatus::not_template;
};

// Cosine between the sentence embeddings of the primary and secondary
// concepts. Captions that do not parse get cs = 1. With `clamp` the cosine
// is clipped to [0, 1].
ConceptScore concept_similarity(std::string_view caption, EmbeddingProvider& sentences,
                                bool clamp = true);

struct CaptionScore {
  std::string video_id;
  double bertscore_f1 = 0.0;
  double cs = 1.0;
  double contribution = 0.0;  // bertscore_f1 * (1 - cs)
  bool penalty_applied = false;
  ParseStatus parse_status = ParseStatus::ok;
};

struct AcdReport {
  double acs = 0.0;
  double acd = 0.0;
  double mean_f1 = 0.0;
  std::size_t n = 0;
  std::vector<CaptionScore> per_caption;  // sorted by video_id
  std::vector<std::string> warnings;
  ProviderDescriptor token_provider;
  ProviderDescriptor sentence_provider;
};

// Fills `contribution` for every row, sorts by video_id, and takes the
// unweighted means. Throws std::invalid_argument on an empty list.
AcdReport aggregate_acd(std::vector<CaptionScore> rows);

struct AcdOptions {
  BertScoreOptions bertscore;
  bool clamp_cs = true;
  std::size_t concurrency = 1;
};

using ReferenceMap = std::map<std::string, std::array<std::string, 3>, std::less<>>;

// Every prediction must have references; an empty prediction set throws.
AcdReport acd(const std::map<std::string, std::string, std::less<>>& predictions,
              const ReferenceMap& references, EmbeddingProvider& tokens,
              EmbeddingProvider& sentences, const AcdOptions& options = {});

std::string acd_report_json(const AcdReport& report, std::string_view model_id = {});
AcdReport acd_report_from_json(std::string_view text);
std::string acd_report_csv(const AcdReport& report);

}  // namespace metaphor_eval
