// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/ngram.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace metaphor_eval {

namespace {

constexpr int kMaxOrder = 4;

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void require_non_empty(std::span<const TokenizedPair> pairs, const char* metric) {
  if (pairs.empty()) throw std::invalid_argument(std::string(metric) + ": empty corpus");
  for (const auto& p : pairs)
    if (p.references.empty())
      throw std::invalid_argument(std::string(metric) + ": pair without references");
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TokenizedPair tokenize_pair(std::string_view hypothesis, std::span<const std::string> references) {
  TokenizedPair pair;
  pair.hypothesis = tokenize(hypothesis);
  for (const auto& r : references) pair.references.push_back(tokenize(r));
  return pair;
}

NgramScore bleu4(std::span<const TokenizedPair> pairs, const BleuOptions& options) {
  require_non_empty(pairs, "bleu4");

  std::array<double, kMaxOrder> matches{}, totals{};
  double hyp_len = 0, ref_len = 0;
  std::size_t longest = 0;

  for (const auto& pair : pairs) {
    const auto& hyp = pair.hypothesis;
    longest = std::max(longest, hyp.size());
    hyp_len += static_cast<double>(hyp.size());

    // Closest reference length, ties resolved toward the shorter reference.
    std::size_t best = pair.references.front().size();
    for (const auto& ref : pair.references) {
      auto d = [&](std::size_t len) {
        return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
      };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best))
        best = ref.size();
    }
    ref_len += static_cast<double>(best);

    for (int n = 1; n <= kMaxOrder; ++n) {
      auto hyp_counts = count_ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& ref : pair.references)
        for (const auto& [gram, c] : count_ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], c);
      for (const auto& [gram, c] : hyp_counts) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matches[n - 1] += std::min(c, it->second);
        totals[n - 1] += c;
      }
    }
  }

  NgramScore score;
  const int order = static_cast<int>(std::min<std::size_t>(kMaxOrder, longest));
  if (order == 0) return score;

  double log_sum = 0;
  for (int n = 0; n < order; ++n) {
    double m = matches[n];
    if (m == 0) {
      if (!options.smooth) return score;
      m = options.epsilon;
    }
    log_sum += std::log(m / totals[n]);
  }
  double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  score.value = 100.0 * bp * std::exp(log_sum / order);
  return score;
}

NgramScore rouge_l(std::span<const TokenizedPair> pairs, double beta) {
  require_non_empty(pairs, "rouge_l");
  const double b2 = beta * beta;

  std::vector<double> items;
  items.reserve(pairs.size());
  for (const auto& pair : pairs) {
    double best = 0.0;
    if (!pair.hypothesis.empty()) {
      for (const auto& ref : pair.references) {
        if (ref.empty()) continue;
        auto lcs = static_cast<double>(lcs_length(pair.hypothesis, ref));
        if (lcs == 0) continue;
        double r = lcs / static_cast<double>(ref.size());
        double p = lcs / static_cast<double>(pair.hypothesis.size());
        best = std::max(best, (1 + b2) * r * p / (r + b2 * p));
      }
    }
    items.push_back(100.0 * best);
  }

  NgramScore score;
  for (double v : items) score.value += v;
  score.value /= static_cast<double>(items.size());
  score.per_item = std::move(items);
  return score;
}

NgramScore cider(std::span<const TokenizedPair> pairs, const CiderOptions& options) {
  require_non_empty(pairs, "cider");
  if (pairs.size() < 2)
    throw std::invalid_argument("cider: document frequency needs at least two documents");

  const double log_docs = std::log(static_cast<double>(pairs.size()));

  // Document frequency over each pair's reference set, per order.
  std::array<std::map<std::vector<std::string>, int>, kMaxOrder> df;
  for (const auto& pair : pairs) {
    for (int n = 1; n <= kMaxOrder; ++n) {
      NgramCounts seen;
      for (const auto& ref : pair.references)
        for (const auto& entry : count_ngrams(ref, n)) seen.insert(entry);
      for (const auto& entry : seen) ++df[n - 1][entry.first];
    }
  }

  struct Weighted {
    std::map<std::vector<std::string>, double> values;
    double norm = 0;
  };
  auto weigh = [&](const Tokens& tokens, int n) {
    Weighted w;
    for (const auto& [gram, c] : count_ngrams(tokens, n)) {
      auto it = df[n - 1].find(gram);
      int freq = it == df[n - 1].end() ? 0 : it->second;
      double v = c * (log_docs - std::log(std::max(1, freq)));
      w.values[gram] = v;
      w.norm += v * v;
    }
    w.norm = std::sqrt(w.norm);
    return w;
  };

  std::vector<double> items;
  items.reserve(pairs.size());
  for (const auto& pair : pairs) {
    double total = 0;
    for (int n = 1; n <= kMaxOrder; ++n) {
      auto hyp = weigh(pair.hypothesis, n);
      double sum_refs = 0;
      for (const auto& ref_tokens : pair.references) {
        auto ref = weigh(ref_tokens, n);
        if (hyp.norm == 0 || ref.norm == 0) continue;
        double dot = 0;
        for (const auto& [gram, hv] : hyp.values) {
          auto it = ref.values.find(gram);
          if (it == ref.values.end()) continue;
          dot += options.cider_d ? std::min(hv, it->second) * it->second : hv * it->second;
        }
        double sim = dot / (hyp.norm * ref.norm);
        if (options.cider_d) {
          double delta = static_cast<double>(pair.hypothesis.size()) -
                         static_cast<double>(ref_tokens.size());
          sim *= std::exp(-(delta * delta) / (2 * options.sigma * options.sigma));
        }
        sum_refs += sim;
      }
      total += sum_refs / static_cast<double>(pair.references.size());
    }
    // Per-item CIDEr is 10 x mean over orders; the report scale adds another 10.
    items.push_back(100.0 * total / kMaxOrder);
  }

  NgramScore score;
  for (double v : items) score.value += v;
  score.value /= static_cast<double>(items.size());
  score.per_item = std::move(items);
  return score;
}

}  // namespace metaphor_eval
