// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "util.hpp"

namespace metaphor_eval {

namespace {

template <typename Labels>
double cohens_kappa_impl(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cohens_kappa: length mismatch");
  if (a.empty()) throw std::invalid_argument("cohens_kappa: empty input");

  const auto n = static_cast<long long>(a.size());
  long long agree = 0, a_pos = 0, b_pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    a_pos += a[i];
    b_pos += b[i];
  }
  // Expected agreement scaled by n^2, kept integral so the degenerate case
  // is detected exactly.
  const long long expected = a_pos * b_pos + (n - a_pos) * (n - b_pos);
  if (expected == n * n) {
    if (agree == n) return 1.0;
    throw std::invalid_argument("cohens_kappa: undefined (chance agreement is 1)");
  }
  const double p_o = static_cast<double>(agree) / static_cast<double>(n);
  const double p_e = static_cast<double>(expected) / static_cast<double>(n * n);
  return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace

double cohens_kappa(std::span<const bool> a, std::span<const bool> b) {
  return cohens_kappa_impl(a, b);
}

double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  return cohens_kappa_impl(a, b);
}

double fleiss_kappa(const std::vector<std::vector<int>>& table, int raters_per_item) {
  if (table.empty()) throw std::invalid_argument("fleiss_kappa: empty table");
  if (raters_per_item < 2) throw std::invalid_argument("fleiss_kappa: need at least 2 raters");
  const std::size_t k = table.front().size();
  if (k < 2) throw std::invalid_argument("fleiss_kappa: need at least 2 categories");

  const double n = raters_per_item;
  std::vector<long long> column(k, 0);
  double sum_p = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != k) throw std::invalid_argument("fleiss_kappa: ragged table");
    long long total = 0, squares = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw std::invalid_argument("fleiss_kappa: negative count");
      total += row[j];
      squares += static_cast<long long>(row[j]) * row[j];
      column[j] += row[j];
    }
    if (total != raters_per_item)
      throw std::invalid_argument("fleiss_kappa: row " + std::to_string(i) + " sums to " +
                                  std::to_string(total) + ", expected " +
                                  std::to_string(raters_per_item));
    sum_p += (static_cast<double>(squares) - n) / (n * (n - 1));
  }

  const double items = static_cast<double>(table.size());
  const double p_bar = sum_p / items;
  const long long all = static_cast<long long>(table.size()) * raters_per_item;
  if (std::count(column.begin(), column.end(), all) == 1) {
    // Only one category was ever used.
    if (p_bar == 1.0) return 1.0;
    throw std::invalid_argument("fleiss_kappa: undefined (chance agreement is 1)");
  }
  double p_e = 0;
  for (long long c : column) {
    double p = static_cast<double>(c) / static_cast<double>(all);
    p_e += p * p;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

PearsonResult pearson_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");

  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw std::invalid_argument("pearson: zero variance");

  PearsonResult result;
  result.n = x.size();
  result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (x.size() > 2) {
    if (std::abs(result.r) == 1.0) {
      result.p_value = 0.0;
    } else {
      const double df = n - 2;
      const double t = result.r * std::sqrt(df / (1 - result.r * result.r));
      boost::math::students_t dist(df);
      result.p_value = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string_view to_string(JudgmentMetric m) {
  switch (m) {
    case JudgmentMetric::fluency: return "fluency";
    case JudgmentMetric::creativity: return "creativity";
    case JudgmentMetric::primary_concept_consistency: return "pcc";
    case JudgmentMetric::consistency: return "consistency";
  }
  return "unknown";
}

bool JudgmentLabel::get(JudgmentMetric m) const {
  switch (m) {
    case JudgmentMetric::fluency: return fluency;
    case JudgmentMetric::creativity: return creativity;
    case JudgmentMetric::primary_concept_consistency: return primary_concept_consistency;
    case JudgmentMetric::consistency: return consistency;
  }
  return false;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss hms{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()), static_cast<long>(hms.subseconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  std::string str(s);
  int y, mo, d, h, mi, sec, consumed = 0;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
    throw DataError("bad timestamp '" + str + "'");
  std::string_view rest = std::string_view(str).substr(static_cast<std::size_t>(consumed));

  long ms = 0;
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    int digits = 0;
    while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) {
      if (digits < 3) ms = ms * 10 + (rest.front() - '0');
      ++digits;
      rest.remove_prefix(1);
    }
    if (digits == 0) throw DataError("bad timestamp '" + str + "'");
    for (; digits < 3; ++digits) ms *= 10;
  }
  minutes offset{0};
  if (rest == "Z" || rest.empty()) {
  } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
    int oh = std::stoi(std::string(rest.substr(1, 2)));
    int om = std::stoi(std::string(rest.substr(4, 2)));
    offset = minutes(oh * 60 + om) * (rest.front() == '-' ? -1 : 1);
  } else {
    throw DataError("bad timestamp '" + str + "'");
  }

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) throw DataError("bad timestamp '" + str + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms} - offset;
}

std::string labels_csv_header() {
  return "video_id,model_id,annotator_id,fluency,creativity,pcc,consistency,timestamp";
}

std::string label_csv_row(const JudgmentLabel& l) {
  std::string row;
  for (const auto* s : {&l.video_id, &l.model_id, &l.annotator_id}) {
    row += detail::csv_escape(*s);
    row += ',';
  }
  for (bool b : {l.fluency, l.creativity, l.primary_concept_consistency, l.consistency}) {
    row += b ? '1' : '0';
    row += ',';
  }
  row += format_timestamp(l.timestamp);
  return row;
}

std::string labels_to_csv(std::span<const JudgmentLabel> labels) {
  std::string out = labels_csv_header() + "\n";
  for (const auto& l : labels) out += label_csv_row(l) + "\n";
  return out;
}

namespace {

bool parse_bool(std::string_view raw, std::size_t line) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c)))
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "1" || s == "true" || s == "yes" || s == "y" || s == "t") return true;
  if (s == "0" || s == "false" || s == "no" || s == "n" || s == "f") return false;
  throw DataError("bad boolean '" + std::string(raw) + "'", line);
}

}  // namespace

std::vector<JudgmentLabel> labels_from_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) header = detail::csv_split(line);
  }
  if (header.empty()) return {};

  const std::array<std::string, 8> names{"video_id", "model_id",  "annotator_id", "fluency",
                                         "creativity", "pcc", "consistency", "timestamp"};
  std::array<std::size_t, 8> col{};
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = std::find(header.begin(), header.end(), names[i]);
    if (it == header.end()) throw DataError("labels CSV is missing column '" + names[i] + "'", line_no);
    col[i] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<JudgmentLabel> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = detail::csv_split(line);
    if (f.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(f.size()), line_no);
    JudgmentLabel l;
    l.video_id = f[col[0]];
    l.model_id = f[col[1]];
    l.annotator_id = f[col[2]];
    if (l.video_id.empty() || l.model_id.empty() || l.annotator_id.empty())
      throw DataError("empty key field", line_no);
    l.fluency = parse_bool(f[col[3]], line_no);
    l.creativity = parse_bool(f[col[4]], line_no);
    l.primary_concept_consistency = parse_bool(f[col[5]], line_no);
    l.consistency = parse_bool(f[col[6]], line_no);
    try {
      l.timestamp = parse_timestamp(f[col[7]]);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
    labels.push_back(std::move(l));
  }
  return labels;
}

std::vector<JudgmentLabel> load_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return labels_from_csv(in);
}

std::vector<JudgmentLabel> latest_labels(std::span<const JudgmentLabel> labels) {
  std::map<std::tuple<std::string, std::string, std::string>, const JudgmentLabel*> latest;
  for (const auto& l : labels) {
    auto& slot = latest[{l.video_id, l.model_id, l.annotator_id}];
    if (!slot || l.timestamp >= slot->timestamp) slot = &l;
  }
  std::vector<JudgmentLabel> out;
  out.reserve(latest.size());
  for (const auto& [key, l] : latest) out.push_back(*l);
  return out;
}

std::map<std::string, MetricProportions> human_eval_summary(std::span<const JudgmentLabel> labels) {
  std::map<std::string, std::array<std::size_t, 4>> positives;
  std::map<std::string, MetricProportions> out;
  for (const auto& l : labels) {
    auto& pos = positives[l.model_id];
    for (std::size_t m = 0; m < kJudgmentMetrics.size(); ++m) pos[m] += l.get(kJudgmentMetrics[m]);
    ++out[l.model_id].labels;
  }
  for (auto& [model, props] : out)
    for (std::size_t m = 0; m < 4; ++m)
      props.positive[m] = static_cast<double>(positives[model][m]) / static_cast<double>(props.labels);
  return out;
}

namespace {

using Item = std::pair<std::string, std::string>;

std::map<Item, const JudgmentLabel*> by_item(std::span<const JudgmentLabel> labels,
                                             std::string_view annotator) {
  std::map<Item, const JudgmentLabel*> out;
  for (const auto& l : labels) {
    if (l.annotator_id != annotator) continue;
    if (!out.emplace(Item{l.video_id, l.model_id}, &l).second)
      throw std::invalid_argument("duplicate label for " + l.video_id + "/" + l.model_id + " by " +
                                  l.annotator_id);
  }
  return out;
}

}  // namespace

AlignedLabels overlap(std::span<const JudgmentLabel> labels, std::string_view annotator_a,
                      std::string_view annotator_b, std::optional<JudgmentMetric> metric) {
  auto a = by_item(labels, annotator_a);
  auto b = by_item(labels, annotator_b);
  AlignedLabels out;
  for (const auto& [item, la] : a) {
    auto it = b.find(item);
    if (it == b.end()) continue;
    for (auto m : kJudgmentMetrics) {
      if (metric && m != *metric) continue;
      out.items.push_back(item);
      out.a.push_back(la->get(m));
      out.b.push_back(it->second->get(m));
    }
  }
  return out;
}

std::vector<std::vector<int>> fleiss_table(std::span<const JudgmentLabel> labels,
                                           std::span<const std::string> annotators,
                                           std::optional<JudgmentMetric> metric) {
  std::vector<std::map<Item, const JudgmentLabel*>> per;
  for (const auto& a : annotators) per.push_back(by_item(labels, a));
  std::vector<std::vector<int>> table;
  if (per.empty()) return table;
  for (const auto& [item, first] : per.front()) {
    std::vector<const JudgmentLabel*> row{first};
    for (std::size_t i = 1; i < per.size(); ++i) {
      auto it = per[i].find(item);
      if (it == per[i].end()) break;
      row.push_back(it->second);
    }
    if (row.size() != per.size()) continue;
    for (auto m : kJudgmentMetrics) {
      if (metric && m != *metric) continue;
      int pos = 0;
      for (const auto* l : row) pos += l->get(m);
      table.push_back({static_cast<int>(row.size()) - pos, pos});
    }
  }
  return table;
}

namespace {

AgreementReport agreement_for(std::span<const JudgmentLabel> labels,
                              const std::vector<std::string>& annotators,
                              std::optional<JudgmentMetric> metric) {
  AgreementReport report;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    for (std::size_t j = i + 1; j < annotators.size(); ++j) {
      auto aligned = overlap(labels, annotators[i], annotators[j], metric);
      if (aligned.a.empty()) continue;
      try {
        double k = cohens_kappa(aligned.a, aligned.b);
        report.pairwise[{annotators[i], annotators[j]}] = k;
        report.pairwise[{annotators[j], annotators[i]}] = k;
        report.pairwise_items[{annotators[i], annotators[j]}] = aligned.a.size();
        report.pairwise_items[{annotators[j], annotators[i]}] = aligned.a.size();
      } catch (const std::invalid_argument&) {
      }
    }
  }
  if (annotators.size() >= 2) {
    auto table = fleiss_table(labels, annotators, metric);
    report.n_items = table.size();
    if (!table.empty()) {
      try {
        report.fleiss = fleiss_kappa(table, static_cast<int>(annotators.size()));
      } catch (const std::invalid_argument&) {
      }
    }
  }
  return report;
}

}  // namespace

AgreementSummary agreement(std::span<const JudgmentLabel> raw) {
  auto labels = latest_labels(raw);
  AgreementSummary summary;
  std::set<std::string> names;
  for (const auto& l : labels) names.insert(l.annotator_id);
  summary.annotators.assign(names.begin(), names.end());
  for (auto m : kJudgmentMetrics) summary.per_metric[m] = agreement_for(labels, summary.annotators, m);
  summary.pooled = agreement_for(labels, summary.annotators, std::nullopt);
  return summary;
}

CorrelationInput correlation_input(const std::map<std::pair<std::string, std::string>, double>& contributions,
                                   std::span<const JudgmentLabel> raw) {
  auto labels = latest_labels(raw);
  std::map<Item, std::pair<std::size_t, std::size_t>> votes;  // positives, total
  for (const auto& l : labels) {
    auto& v = votes[{l.video_id, l.model_id}];
    v.first += l.creativity;
    ++v.second;
  }
  CorrelationInput out;
  for (const auto& [item, v] : votes) {
    auto it = contributions.find(item);
    if (it == contributions.end()) continue;
    out.items.push_back(item);
    out.acd.push_back(it->second);
    out.creativity.push_back(static_cast<double>(v.first) / static_cast<double>(v.second));
  }
  return out;
}

}  // namespace metaphor_eval
