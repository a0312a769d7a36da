// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "metaphor_eval/ngram.hpp"
#include "util.hpp"

namespace metaphor_eval {

using nlohmann::json;

namespace {

constexpr std::array<ColumnInfo, 6> kColumnInfo{{
    {"bleu4", "BLEU-4", true},
    {"rouge_l", "Rouge-L", true},
    {"cider", "CIDEr", true},
    {"bert_f1", "BERT-F1", true},
    {"acs", "ACS", false},
    {"acd", "ACD", true},
}};

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

const ColumnInfo& column_info(Column c) { return kColumnInfo[static_cast<std::size_t>(c)]; }

std::optional<Column> parse_column(std::string_view key) {
  for (auto c : kColumns)
    if (column_info(c).key == key) return c;
  return std::nullopt;
}

void MetricReport::check() const {
  for (const auto& [col, values] : columns) {
    if (values.per_run.size() != runs)
      throw std::logic_error(model_id + ": " + std::string(column_info(col).key) + " has " +
                             std::to_string(values.per_run.size()) + " runs, expected " +
                             std::to_string(runs));
    double recomputed = mean_of(values.per_run);
    if (std::abs(recomputed - values.mean) > 1e-9 * std::max(1.0, std::abs(recomputed)))
      throw std::logic_error(model_id + ": " + std::string(column_info(col).key) +
                             " mean does not match its runs");
  }
}

PredictionSource parse_prediction_source(std::string_view spec) {
  auto first = spec.find(':');
  auto second = first == std::string_view::npos ? first : spec.find(':', first + 1);
  if (second == std::string_view::npos)
    throw std::invalid_argument("prediction source must be model:run:path, got '" +
                                std::string(spec) + "'");
  PredictionSource src;
  src.model_id = std::string(spec.substr(0, first));
  auto run = std::string(spec.substr(first + 1, second - first - 1));
  src.path = std::string(spec.substr(second + 1));
  try {
    std::size_t used = 0;
    src.run_id = std::stoi(run, &used);
    if (used != run.size()) throw std::invalid_argument(run);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad run id '" + run + "' in '" + std::string(spec) + "'");
  }
  if (src.model_id.empty() || src.path.empty() || src.run_id < 1)
    throw std::invalid_argument("prediction source must be model:run:path, got '" +
                                std::string(spec) + "'");
  return src;
}

std::optional<ReportFormat> parse_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  return std::nullopt;
}

void validate(const JobConfig& config) {
  if (config.metrics.empty()) throw Error("no metric enabled");
  if (!std::filesystem::exists(config.corpus))
    throw Error("corpus file not found: " + config.corpus.string());
  if (config.predictions.empty()) throw Error("no prediction files given");
  std::set<std::pair<std::string, int>> seen;
  for (const auto& p : config.predictions) {
    if (!std::filesystem::exists(p.path)) throw Error("prediction file not found: " + p.path.string());
    if (!seen.insert({p.model_id, p.run_id}).second)
      throw Error("duplicate run " + std::to_string(p.run_id) + " for model " + p.model_id);
  }
  if (config.concurrency == 0) throw Error("concurrency must be at least 1");
  if (config.flags.bertscore_rescale && !(*config.flags.bertscore_rescale < 1.0))
    throw Error("BERTScore rescale baseline must be below 1");
}

Evaluation evaluate(const Corpus& corpus, std::span<const PredictionSet> predictions,
                    EmbeddingProvider& provider, const EvalOptions& options) {
  if (predictions.empty()) throw std::invalid_argument("evaluate: no predictions");
  const auto& metrics = options.metrics;
  if (metrics.empty()) throw std::invalid_argument("evaluate: no metric enabled");
  const bool want_semantic = metrics.count(MetricGroup::bertscore) || metrics.count(MetricGroup::creativity);

  Evaluation eval;
  std::map<std::string, std::vector<const PredictionSet*>> by_model;
  for (const auto& set : predictions) {
    check_predictions(corpus, set);
    auto& runs = by_model[set.model_id];
    for (const auto* other : runs)
      if (other->run_id == set.run_id)
        throw DataError("duplicate run " + std::to_string(set.run_id) + " for model " + set.model_id);
    runs.push_back(&set);
  }

  auto test_ids = corpus.ids(Split::test);
  std::sort(test_ids.begin(), test_ids.end());
  if (test_ids.empty()) throw DataError("corpus has no test-split videos");

  ReferenceMap references;
  for (const auto& id : test_ids) references.emplace(id, corpus.captions_for(id)->references);

  std::optional<TokenIdf> idf;
  if (want_semantic && options.flags.bertscore_idf) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& [id, refs] : references)
      for (const auto& r : refs) {
        std::vector<std::string> toks;
        for (auto& t : provider.embed_tokens(r)) toks.push_back(std::move(t.token));
        docs.push_back(std::move(toks));
      }
    idf = TokenIdf::from_references(docs);
  }

  AcdOptions acd_options;
  acd_options.clamp_cs = options.flags.clamp_cs;
  acd_options.concurrency = options.concurrency;
  acd_options.bertscore.idf = idf ? &*idf : nullptr;
  acd_options.bertscore.rescale_baseline = options.flags.bertscore_rescale;

  for (auto& [model, runs] : by_model) {
    std::sort(runs.begin(), runs.end(), [](auto* a, auto* b) { return a->run_id < b->run_id; });
    MetricReport report;
    report.model_id = model;
    report.runs = runs.size();
    report.provider = provider.descriptor();
    std::set<std::string> missing;

    for (const auto* set : runs) {
      std::vector<TokenizedPair> pairs;
      std::map<std::string, std::string, std::less<>> covered;
      std::vector<std::string> run_missing;
      for (const auto& id : test_ids) {
        auto it = set->items.find(id);
        if (it == set->items.end()) {
          run_missing.push_back(id);
          missing.insert(id);
          continue;
        }
        covered.emplace(id, it->second);
        const auto& refs = references.at(id);
        pairs.push_back(tokenize_pair(it->second, refs));
      }
      if (covered.empty())
        throw DataError(model + " run " + std::to_string(set->run_id) +
                        " covers no test-split video");
      const double coverage =
          static_cast<double>(covered.size()) / static_cast<double>(test_ids.size());
      report.coverage = std::min(report.coverage, coverage);
      if (!run_missing.empty()) {
        std::string ids;
        for (const auto& id : run_missing) ids += (ids.empty() ? "" : ", ") + id;
        eval.warnings.push_back(model + " run " + std::to_string(set->run_id) + ": missing " +
                                std::to_string(run_missing.size()) + " of " +
                                std::to_string(test_ids.size()) +
                                " test predictions, scored on the covered subset (coverage " +
                                detail::fixed(100.0 * coverage, 1) + "%): " + ids);
      }

      auto push = [&report](Column c, double v) { report.columns[c].per_run.push_back(v); };
      if (metrics.count(MetricGroup::bleu4))
        push(Column::bleu4, bleu4(pairs, {options.flags.bleu_smooth}).value);
      if (metrics.count(MetricGroup::rouge_l)) push(Column::rouge_l, rouge_l(pairs).value);
      if (metrics.count(MetricGroup::cider)) {
        if (pairs.size() < 2)
          throw DataError(model + " run " + std::to_string(set->run_id) +
                          ": CIDEr needs at least two covered videos");
        push(Column::cider, cider(pairs, {options.flags.cider_d}).value);
      }
      if (want_semantic) {
        auto audit = acd(covered, references, provider, provider, acd_options);
        for (const auto& w : audit.warnings)
          eval.warnings.push_back(model + " run " + std::to_string(set->run_id) + ": " + w);
        if (metrics.count(MetricGroup::bertscore)) push(Column::bert_f1, audit.mean_f1);
        if (metrics.count(MetricGroup::creativity)) {
          push(Column::acs, audit.acs);
          push(Column::acd, audit.acd);
        }
        eval.audits.emplace(std::make_pair(model, set->run_id), std::move(audit));
      }
    }

    for (auto& [col, values] : report.columns) values.mean = mean_of(values.per_run);
    report.missing_videos.assign(missing.begin(), missing.end());
    report.check();
    eval.reports.push_back(std::move(report));
  }

  std::stable_sort(eval.reports.begin(), eval.reports.end(), [](const auto& a, const auto& b) {
    auto ia = a.columns.find(Column::acd), ib = b.columns.find(Column::acd);
    double va = ia == a.columns.end() ? -INFINITY : ia->second.mean;
    double vb = ib == b.columns.end() ? -INFINITY : ib->second.mean;
    return va > vb;
  });
  return eval;
}

Evaluation evaluate(const JobConfig& config, std::shared_ptr<EmbeddingProvider> provider) {
  validate(config);
  auto corpus = load_corpus(config.corpus);
  std::vector<PredictionSet> sets;
  for (const auto& src : config.predictions)
    sets.push_back(load_predictions(src.path, src.model_id, src.run_id));
  if (!provider) provider = make_provider(config.provider);

  EvalOptions options;
  options.flags = config.flags;
  options.metrics = config.metrics;
  options.concurrency = config.concurrency;
  auto eval = evaluate(corpus, sets, *provider, options);

  if (config.audit_dir) {
    std::filesystem::create_directories(*config.audit_dir);
    for (const auto& [key, audit] : eval.audits) {
      auto path = *config.audit_dir / (key.first + "." + std::to_string(key.second) + ".acd.json");
      std::ofstream out(path);
      if (!out) throw Error("cannot write " + path.string());
      out << acd_report_json(audit, key.first) << '\n';
    }
  }
  return eval;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::vector<Column> used_columns(std::span<const MetricReport> reports) {
  std::vector<Column> out;
  for (auto c : kColumns)
    for (const auto& r : reports)
      if (r.columns.count(c)) {
        out.push_back(c);
        break;
      }
  return out;
}

json descriptor_json(const ProviderDescriptor& d) {
  return {{"kind", std::string(to_string(d.kind))}, {"model", d.model_name}, {"dim", d.dim}};
}

}  // namespace

std::string render_markdown(std::span<const MetricReport> reports, std::span<const std::string> warnings) {
  for (const auto& r : reports) r.check();
  const auto cols = used_columns(reports);
  std::ostringstream out;

  out << "## Caption evaluation\n\n";
  if (!reports.empty()) {
    const auto& p = reports.front().provider;
    out << "Embedding provider: " << to_string(p.kind) << " `" << p.model_name << "` (dim " << p.dim
        << ")\n\n";
  }
  for (const auto& w : warnings) out << "> **WARN** " << w << "\n";
  for (const auto& r : reports)
    if (r.coverage < 1.0)
      out << "> **WARN** " << r.model_id << ": predictions cover "
          << detail::fixed(100.0 * r.coverage, 1) << "% of the test split\n";
  if (!warnings.empty() || std::any_of(reports.begin(), reports.end(),
                                       [](const auto& r) { return r.coverage < 1.0; }))
    out << "\n";

  // Ranks come from the printed values.
  std::map<Column, std::pair<std::optional<double>, std::optional<double>>> podium;
  for (auto c : cols) {
    std::vector<double> shown;
    for (const auto& r : reports)
      if (auto it = r.columns.find(c); it != r.columns.end())
        shown.push_back(std::stod(detail::fixed(it->second.mean, 2)));
    if (shown.size() < 2) continue;
    const bool higher = column_info(c).higher_is_better;
    std::sort(shown.begin(), shown.end(), [higher](double a, double b) { return higher ? a > b : a < b; });
    shown.erase(std::unique(shown.begin(), shown.end()), shown.end());
    podium[c].first = shown[0];
    if (shown.size() > 1) podium[c].second = shown[1];
  }

  out << "| Model |";
  for (auto c : cols)
    out << ' ' << column_info(c).header << (column_info(c).higher_is_better ? " ↑" : " ↓") << " |";
  out << "\n|:---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|";
  out << "\n";
  for (const auto& r : reports) {
    out << "| " << r.model_id << " |";
    for (auto c : cols) {
      auto it = r.columns.find(c);
      if (it == r.columns.end()) {
        out << " - |";
        continue;
      }
      auto text = detail::fixed(it->second.mean, 2);
      double shown = std::stod(text);
      auto pod = podium.find(c);
      if (pod != podium.end() && pod->second.first == shown)
        text = "**" + text + "**";
      else if (pod != podium.end() && pod->second.second == shown)
        text = "<u>" + text + "</u>";
      out << ' ' << text << " |";
    }
    out << "\n";
  }

  out << "\nScores are means over runs (";
  for (std::size_t i = 0; i < reports.size(); ++i)
    out << (i ? ", " : "") << reports[i].model_id << ": " << reports[i].runs;
  out << "). Best in bold, runner-up underlined.\n";
  return out.str();
}

std::string render_csv(std::span<const MetricReport> reports) {
  for (const auto& r : reports) r.check();
  const auto cols = used_columns(reports);
  std::ostringstream out;
  out << "model_id,runs,coverage";
  for (auto c : cols) out << ',' << column_info(c).key;
  out << "\n";
  for (const auto& r : reports) {
    out << detail::csv_escape(r.model_id) << ',' << r.runs << ',' << detail::fixed(r.coverage, 6);
    for (auto c : cols) {
      out << ',';
      if (auto it = r.columns.find(c); it != r.columns.end()) out << detail::fixed(it->second.mean, 6);
    }
    out << "\n";
  }
  return out.str();
}

std::string render_json(std::span<const MetricReport> reports, std::span<const std::string> warnings) {
  json j;
  j["reports"] = json::array();
  for (const auto& r : reports) {
    r.check();
    json cols = json::object();
    for (const auto& [c, v] : r.columns)
      cols[std::string(column_info(c).key)] = {{"mean", v.mean}, {"per_run", v.per_run}};
    j["reports"].push_back({{"model_id", r.model_id},
                            {"runs", r.runs},
                            {"coverage", r.coverage},
                            {"missing_videos", r.missing_videos},
                            {"provider", descriptor_json(r.provider)},
                            {"columns", cols}});
  }
  j["warnings"] = std::vector<std::string>(warnings.begin(), warnings.end());
  return j.dump(2) + "\n";
}

std::string render(std::span<const MetricReport> reports, ReportFormat format,
                   std::span<const std::string> warnings) {
  switch (format) {
    case ReportFormat::markdown: return render_markdown(reports, warnings);
    case ReportFormat::csv: return render_csv(reports);
    case ReportFormat::json: return render_json(reports, warnings);
  }
  return {};
}

std::vector<MetricReport> reports_from_json(std::string_view text) {
  std::vector<MetricReport> out;
  try {
    auto j = json::parse(text);
    for (const auto& r : j.at("reports")) {
      MetricReport report;
      report.model_id = r.at("model_id").get<std::string>();
      report.coverage = r.value("coverage", 1.0);
      report.missing_videos = r.value("missing_videos", std::vector<std::string>{});
      if (r.contains("provider")) {
        const auto& p = r["provider"];
        auto kind = p.value("kind", std::string("deterministic_test"));
        report.provider.kind = kind == "file_store"    ? ProviderKind::file_store
                               : kind == "remote_http" ? ProviderKind::remote_http
                                                       : ProviderKind::deterministic_test;
        report.provider.model_name = p.value("model", std::string());
        report.provider.dim = p.value("dim", std::size_t{0});
      }
      std::optional<std::size_t> runs;
      for (const auto& [key, v] : r.at("columns").items()) {
        auto col = parse_column(key);
        if (!col) throw DataError("unknown report column '" + key + "'");
        ColumnValues values;
        values.per_run = v.at("per_run").get<std::vector<double>>();
        values.mean = v.contains("mean") ? v["mean"].get<double>() : mean_of(values.per_run);
        if (!runs) runs = values.per_run.size();
        report.columns[*col] = std::move(values);
      }
      report.runs = r.contains("runs") ? r["runs"].get<std::size_t>() : runs.value_or(0);
      try {
        report.check();
      } catch (const std::logic_error& e) {
        throw DataError(e.what());
      }
      out.push_back(std::move(report));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad report JSON: ") + e.what());
  }
  return out;
}

}  // namespace metaphor_eval
