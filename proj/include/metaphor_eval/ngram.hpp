// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metaphor_eval {

using Tokens = std::vector<std::string>;

// Lowercases ASCII letters and splits on whitespace and ASCII punctuation.
// Punctuation is dropped: "Snow, white!" -> {"snow", "white"}.
Tokens tokenize(std::string_view text);

struct TokenizedPair {
  Tokens hypothesis;
  std::vector<Tokens> references;
};

TokenizedPair tokenize_pair(std::string_view hypothesis, std::span<const std::string> references);

// Scores are reported on a 0..100 scale. `per_item` is filled for ROUGE-L
// and CIDEr and uses the same scale.
struct NgramScore {
  double value = 0.0;
  std::optional<std::vector<double>> per_item;
};

struct BleuOptions {
  // Replace zero match counts by `epsilon` instead of letting them zero the
  // geometric mean.
  bool smooth = false;
  double epsilon = 1e-9;
};

// Corpus BLEU-4 with per-reference clipping and closest-reference brevity
// penalty. When every hypothesis is shorter than four tokens the maximum
// order drops to the longest hypothesis length.
NgramScore bleu4(std::span<const TokenizedPair> pairs, const BleuOptions& options = {});

// LCS F-measure, best reference per item, corpus mean.
NgramScore rouge_l(std::span<const TokenizedPair> pairs, double beta = 1.2);

struct CiderOptions {
  // CIDEr-D: clipped n-gram counts and a gaussian length penalty.
  bool cider_d = false;
  double sigma = 6.0;
};

// Each pair is one document for document frequency; fewer than two pairs
// throws std::invalid_argument.
NgramScore cider(std::span<const TokenizedPair> pairs, const CiderOptions& options = {});

}  // namespace metaphor_eval
