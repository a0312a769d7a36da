// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "util.hpp"

namespace metaphor_eval {

using nlohmann::json;

TokenIdf TokenIdf::from_references(std::span<const std::vector<std::string>> token_docs) {
  TokenIdf idf;
  idf.docs_ = token_docs.size();
  std::map<std::string, std::size_t> df;
  for (const auto& doc : token_docs)
    for (const auto& tok : std::set<std::string>(doc.begin(), doc.end())) ++df[tok];
  const double m = static_cast<double>(idf.docs_);
  for (const auto& [tok, count] : df)
    idf.weights_[tok] = std::log((m + 1.0) / (static_cast<double>(count) + 1.0));
  return idf;
}

double TokenIdf::weight(std::string_view token) const {
  auto it = weights_.find(token);
  if (it != weights_.end()) return it->second;
  return std::log(static_cast<double>(docs_) + 1.0);
}

namespace {

// Weighted mean over `from` of the best cosine against any token in `to`.
double greedy_side(std::span<const TokenEmbedding> from, std::span<const TokenEmbedding> to,
                   const TokenIdf* idf) {
  double num = 0, den = 0, plain = 0;
  for (const auto& a : from) {
    double best = -1.0;
    for (const auto& b : to) best = std::max(best, cosine(a.vector, b.vector));
    double w = idf ? idf->weight(a.token) : 1.0;
    num += w * best;
    den += w;
    plain += best;
  }
  // All-zero idf weights fall back to uniform weighting.
  double mean = den > 0 ? num / den : plain / static_cast<double>(from.size());
  return std::max(0.0, mean);
}

double rescale(double v, const std::optional<double>& baseline) {
  if (!baseline) return v;
  return (v - *baseline) / (1.0 - *baseline);
}

}  // namespace

BertScoreTriple bertscore_tokens(std::span<const TokenEmbedding> hypothesis,
                                 std::span<const TokenEmbedding> reference,
                                 const BertScoreOptions& options) {
  BertScoreTriple t;
  if (hypothesis.empty() || reference.empty()) {
    t.empty_input = true;
    return t;
  }
  t.precision = greedy_side(hypothesis, reference, options.idf);
  t.recall = greedy_side(reference, hypothesis, options.idf);
  t.f1 = t.precision + t.recall > 0 ? 2 * t.precision * t.recall / (t.precision + t.recall) : 0.0;
  if (options.rescale_baseline) {
    t.precision = rescale(t.precision, options.rescale_baseline);
    t.recall = rescale(t.recall, options.rescale_baseline);
    t.f1 = rescale(t.f1, options.rescale_baseline);
  }
  return t;
}

BertScoreTriple bertscore(std::string_view hypothesis, std::span<const std::string> references,
                          EmbeddingProvider& tokens, const BertScoreOptions& options) {
  if (hypothesis.empty()) throw std::invalid_argument("bertscore: empty hypothesis");
  if (references.empty()) throw std::invalid_argument("bertscore: no references");

  const auto hyp = tokens.embed_tokens(hypothesis);
  BertScoreTriple best;
  best.empty_input = true;
  bool have = false;
  for (const auto& ref_text : references) {
    if (ref_text.empty()) continue;
    auto t = bertscore_tokens(hyp, tokens.embed_tokens(ref_text), options);
    if (t.empty_input) continue;
    if (!have || t.f1 > best.f1) {
      best = t;
      have = true;
    }
  }
  return best;
}

ConceptScore concept_similarity(std::string_view caption, EmbeddingProvider& sentences, bool clamp) {
  ConceptScore score;
  auto pm = parse_caption(caption);
  score.parse_status = pm.status;
  if (!pm.ok()) {
    score.cs = 1.0;
    score.penalty_applied = true;
    return score;
  }
  double cs = cosine(sentences.embed_sentence(pm.primary_text()),
                     sentences.embed_sentence(pm.secondary_text()));
  score.cs = clamp ? std::clamp(cs, 0.0, 1.0) : cs;
  return score;
}

AcdReport aggregate_acd(std::vector<CaptionScore> rows) {
  if (rows.empty()) throw std::invalid_argument("acd: empty prediction set");
  std::sort(rows.begin(), rows.end(),
            [](const CaptionScore& a, const CaptionScore& b) { return a.video_id < b.video_id; });
  AcdReport report;
  double sum_cs = 0, sum_contrib = 0, sum_f1 = 0;
  for (auto& row : rows) {
    row.contribution = row.bertscore_f1 * (1.0 - row.cs);
    sum_cs += row.cs;
    sum_contrib += row.contribution;
    sum_f1 += row.bertscore_f1;
  }
  report.n = rows.size();
  const auto n = static_cast<double>(report.n);
  report.acs = sum_cs / n;
  report.acd = sum_contrib / n;
  report.mean_f1 = sum_f1 / n;
  report.per_caption = std::move(rows);
  return report;
}

AcdReport acd(const std::map<std::string, std::string, std::less<>>& predictions,
              const ReferenceMap& references, EmbeddingProvider& tokens,
              EmbeddingProvider& sentences, const AcdOptions& options) {
  if (predictions.empty()) throw std::invalid_argument("acd: empty prediction set");

  std::vector<std::pair<const std::string*, const std::string*>> items;
  std::vector<const std::array<std::string, 3>*> refs;
  for (const auto& [video, caption] : predictions) {
    auto it = references.find(video);
    if (it == references.end())
      throw std::invalid_argument("acd: no references for video '" + video + "'");
    items.emplace_back(&video, &caption);
    refs.push_back(&it->second);
  }

  std::vector<CaptionScore> rows(items.size());
  std::vector<std::string> warnings(items.size());
  detail::parallel_for(items.size(), options.concurrency, [&](std::size_t i) {
    const auto& caption = *items[i].second;
    CaptionScore& row = rows[i];
    row.video_id = *items[i].first;
    if (caption.empty()) {
      warnings[i] = "empty caption for " + row.video_id;
      row.bertscore_f1 = 0.0;
    } else {
      auto bs = bertscore(caption, *refs[i], tokens, options.bertscore);
      if (bs.empty_input) warnings[i] = "no tokens to match for " + row.video_id;
      row.bertscore_f1 = bs.f1;
    }
    auto cs = concept_similarity(caption, sentences, options.clamp_cs);
    row.cs = cs.cs;
    row.penalty_applied = cs.penalty_applied;
    row.parse_status = cs.parse_status;
  });

  auto report = aggregate_acd(std::move(rows));
  for (auto& w : warnings)
    if (!w.empty()) report.warnings.push_back(std::move(w));
  report.token_provider = tokens.descriptor();
  report.sentence_provider = sentences.descriptor();
  return report;
}

namespace {

json descriptor_json(const ProviderDescriptor& d) {
  return {{"kind", std::string(to_string(d.kind))}, {"model", d.model_name}, {"dim", d.dim}};
}

ProviderDescriptor descriptor_from_json(const json& j) {
  ProviderDescriptor d;
  auto kind = j.value("kind", std::string("deterministic_test"));
  if (kind == "file_store") d.kind = ProviderKind::file_store;
  else if (kind == "remote_http") d.kind = ProviderKind::remote_http;
  else d.kind = ProviderKind::deterministic_test;
  d.model_name = j.value("model", std::string());
  d.dim = j.value("dim", std::size_t{0});
  return d;
}

ParseStatus status_from_string(const std::string& s) {
  for (auto st : {ParseStatus::ok, ParseStatus::no_primary, ParseStatus::no_secondary,
                  ParseStatus::no_property, ParseStatus::not_template})
    if (to_string(st) == s) return st;
  throw DataError("unknown parse status '" + s + "'");
}

}  // namespace

std::string acd_report_json(const AcdReport& report, std::string_view model_id) {
  json j;
  if (!model_id.empty()) j["model_id"] = std::string(model_id);
  j["acs"] = report.acs;
  j["acd"] = report.acd;
  j["mean_bert_f1"] = report.mean_f1;
  j["n"] = report.n;
  j["token_provider"] = descriptor_json(report.token_provider);
  j["sentence_provider"] = descriptor_json(report.sentence_provider);
  j["per_caption"] = json::array();
  for (const auto& row : report.per_caption)
    j["per_caption"].push_back({{"video_id", row.video_id},
                                {"bertscore_f1", row.bertscore_f1},
                                {"cs", row.cs},
                                {"contribution", row.contribution},
                                {"penalty_applied", row.penalty_applied},
                                {"parse_status", std::string(to_string(row.parse_status))}});
  j["warnings"] = report.warnings;
  return j.dump(2);
}

AcdReport acd_report_from_json(std::string_view text) {
  try {
    auto j = json::parse(text);
    std::vector<CaptionScore> rows;
    for (const auto& r : j.at("per_caption")) {
      CaptionScore row;
      row.video_id = r.at("video_id").get<std::string>();
      row.bertscore_f1 = r.at("bertscore_f1").get<double>();
      row.cs = r.at("cs").get<double>();
      row.penalty_applied = r.value("penalty_applied", false);
      row.parse_status = status_from_string(r.value("parse_status", std::string("ok")));
      rows.push_back(std::move(row));
    }
    auto report = aggregate_acd(std::move(rows));
    report.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("token_provider")) report.token_provider = descriptor_from_json(j["token_provider"]);
    if (j.contains("sentence_provider"))
      report.sentence_provider = descriptor_from_json(j["sentence_provider"]);
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad ACD report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("bad ACD report: ") + e.what());
  }
}

std::string acd_report_csv(const AcdReport& report) {
  std::ostringstream out;
  out << "# acs=" << detail::fixed(report.acs, 6) << " acd=" << detail::fixed(report.acd, 6)
      << " mean_bert_f1=" << detail::fixed(report.mean_f1, 6) << " n=" << report.n
      << " provider=" << report.sentence_provider.model_name << '\n';
  out << "video_id,bertscore_f1,cs,contribution,penalty_applied,parse_status\n";
  for (const auto& row : report.per_caption)
    out << detail::csv_escape(row.video_id) << ',' << detail::fixed(row.bertscore_f1, 6) << ','
        << detail::fixed(row.cs, 6) << ',' << detail::fixed(row.contribution, 6) << ','
        << (row.penalty_applied ? "true" : "false") << ',' << to_string(row.parse_status) << '\n';
  return out.str();
}

}  // namespace metaphor_eval
