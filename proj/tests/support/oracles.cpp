// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace mtest::oracle {

using metaphor_eval::Tokens;
using metaphor_eval::TokenizedPair;

namespace {

// n-grams as strings joined with a separator that never appears in tokens.
std::vector<std::string> grams(const Tokens& t, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += (k ? "\x1f" : "") + t[i + k];
    out.push_back(g);
  }
  return out;
}

std::size_t occurrences(const std::vector<std::string>& list, const std::string& g) {
  return static_cast<std::size_t>(std::count(list.begin(), list.end(), g));
}

}  // namespace

double bleu(const std::vector<TokenizedPair>& pairs) {
  std::size_t longest = 0;
  for (const auto& p : pairs) longest = std::max(longest, p.hypothesis.size());
  const std::size_t order = std::min<std::size_t>(4, longest);
  if (order == 0) return 0.0;

  double c = 0, r = 0;
  std::vector<double> hit(order, 0), all(order, 0);
  for (const auto& p : pairs) {
    const double h = static_cast<double>(p.hypothesis.size());
    c += h;
    std::vector<std::size_t> lens;
    for (const auto& ref : p.references) lens.push_back(ref.size());
    std::sort(lens.begin(), lens.end(), [h](std::size_t a, std::size_t b) {
      double da = std::abs(static_cast<double>(a) - h), db = std::abs(static_cast<double>(b) - h);
      return da != db ? da < db : a < b;
    });
    r += static_cast<double>(lens.front());

    for (std::size_t n = 1; n <= order; ++n) {
      auto hyp = grams(p.hypothesis, n);
      std::set<std::string> distinct(hyp.begin(), hyp.end());
      for (const auto& g : distinct) {
        std::size_t best = 0;
        for (const auto& ref : p.references) best = std::max(best, occurrences(grams(ref, n), g));
        hit[n - 1] += static_cast<double>(std::min(occurrences(hyp, g), best));
      }
      all[n - 1] += static_cast<double>(hyp.size());
    }
  }
  double product = 1.0;
  for (std::size_t n = 0; n < order; ++n) product *= hit[n] / all[n];
  if (product == 0.0) return 0.0;
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::pow(product, 1.0 / static_cast<double>(order));
}

std::size_t lcs(const Tokens& a, const Tokens& b) {
  if (a.size() > 20) throw std::invalid_argument("oracle lcs: sequence too long");
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::size_t size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = size;
  }
  return best;
}

std::vector<double> rouge_l(const std::vector<TokenizedPair>& pairs, double beta) {
  std::vector<double> out;
  for (const auto& p : pairs) {
    double best = 0;
    for (const auto& ref : p.references) {
      double l = static_cast<double>(lcs(p.hypothesis, ref));
      if (l == 0) continue;
      double prec = l / static_cast<double>(p.hypothesis.size());
      double rec = l / static_cast<double>(ref.size());
      best = std::max(best, (1 + beta * beta) * prec * rec / (rec + beta * beta * prec));
    }
    out.push_back(best);
  }
  return out;
}

std::vector<double> cider(const std::vector<TokenizedPair>& pairs) {
  const double docs = static_cast<double>(pairs.size());
  std::vector<double> score(pairs.size(), 0.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    // Vocabulary of every n-gram in the corpus, hypotheses included.
    std::vector<std::string> vocab;
    for (const auto& p : pairs) {
      for (auto& g : grams(p.hypothesis, n)) vocab.push_back(g);
      for (const auto& ref : p.references)
        for (auto& g : grams(ref, n)) vocab.push_back(g);
    }
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

    std::vector<double> idf(vocab.size());
    for (std::size_t v = 0; v < vocab.size(); ++v) {
      double df = 0;
      for (const auto& p : pairs) {
        bool found = false;
        for (const auto& ref : p.references) found = found || occurrences(grams(ref, n), vocab[v]) > 0;
        df += found;
      }
      idf[v] = std::log(docs / std::max(1.0, df));
    }
    auto dense = [&](const Tokens& t) {
      auto list = grams(t, n);
      std::vector<double> x(vocab.size());
      for (std::size_t v = 0; v < vocab.size(); ++v) x[v] = static_cast<double>(occurrences(list, vocab[v])) * idf[v];
      return x;
    };
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto h = dense(pairs[i].hypothesis);
      double total = 0;
      for (const auto& ref : pairs[i].references) {
        auto r = dense(ref);
        double dot = 0, hh = 0, rr = 0;
        for (std::size_t v = 0; v < vocab.size(); ++v) {
          dot += h[v] * r[v];
          hh += h[v] * h[v];
          rr += r[v] * r[v];
        }
        if (hh > 0 && rr > 0) total += dot / std::sqrt(hh * rr);
      }
      score[i] += total / static_cast<double>(pairs[i].references.size());
    }
  }
  for (auto& s : score) s = 10.0 * s / 4.0;
  return score;
}

Triple bertscore(const std::vector<metaphor_eval::EmbeddingVector>& hyp,
                 const std::vector<metaphor_eval::EmbeddingVector>& ref) {
  std::vector<std::vector<double>> sim(hyp.size(), std::vector<double>(ref.size()));
  for (std::size_t i = 0; i < hyp.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j) {
      double dot = 0, a = 0, b = 0;
      for (std::size_t k = 0; k < hyp[i].values.size(); ++k) {
        dot += hyp[i].values[k] * ref[j].values[k];
        a += hyp[i].values[k] * hyp[i].values[k];
        b += ref[j].values[k] * ref[j].values[k];
      }
      sim[i][j] = dot / std::sqrt(a * b);
    }
  double p = 0, r = 0;
  for (std::size_t i = 0; i < hyp.size(); ++i) p += *std::max_element(sim[i].begin(), sim[i].end());
  for (std::size_t j = 0; j < ref.size(); ++j) {
    double best = -2;
    for (std::size_t i = 0; i < hyp.size(); ++i) best = std::max(best, sim[i][j]);
    r += best;
  }
  p = std::max(0.0, p / static_cast<double>(hyp.size()));
  r = std::max(0.0, r / static_cast<double>(ref.size()));
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

}  // namespace mtest::oracle
