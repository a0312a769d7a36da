// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>

#include <json.hpp>

#include "metaphor_eval/template.hpp"

namespace metaphor_eval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n\f\v");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(begin, end - begin + 1));
}

bool blank(std::string_view line) { return line.find_first_not_of(" \t\r\n") == std::string_view::npos; }

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw DataError("malformed line: expected a JSON object", line_no);
    return j;
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed line: ") + e.what(), line_no);
  }
}

template <typename T>
T field(const json& j, const char* name, std::size_t line_no) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field '") + name + "'", line_no);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + name + "' has the wrong type", line_no);
  }
}

template <typename T>
T optional_field(const json& j, const char* name, T fallback, std::size_t line_no) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  return field<T>(j, name, line_no);
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

Corpus::Corpus(std::vector<VideoRecord> videos, std::vector<CaptionSet> captions)
    : videos_(std::move(videos)), captions_(std::move(captions)) {
  if (videos_.size() != captions_.size())
    throw DataError("corpus needs one caption set per video");
  for (std::size_t i = 0; i < videos_.size(); ++i) {
    const auto& v = videos_[i];
    if (v.video_id.empty()) throw DataError("empty video_id");
    if (!(v.duration_s > 0) || !std::isfinite(v.duration_s))
      throw DataError("video '" + v.video_id + "' has nonpositive duration");
    if (captions_[i].video_id != v.video_id)
      throw DataError("caption set " + captions_[i].video_id + " does not match video " + v.video_id);
    for (const auto& r : captions_[i].references)
      if (r.empty()) throw DataError("video '" + v.video_id + "' has an empty reference");
    if (!index_.emplace(v.video_id, i).second)
      throw DataError("duplicate video_id '" + v.video_id + "'");
    switch (v.split) {
      case Split::train: ++video_counts_.train; break;
      case Split::val: ++video_counts_.val; break;
      case Split::test: ++video_counts_.test; break;
    }
  }
}

const VideoRecord* Corpus::find(std::string_view video_id) const {
  auto it = index_.find(video_id);
  return it == index_.end() ? nullptr : &videos_[it->second];
}

const CaptionSet* Corpus::captions_for(std::string_view video_id) const {
  auto it = index_.find(video_id);
  return it == index_.end() ? nullptr : &captions_[it->second];
}

SplitCounts Corpus::caption_counts() const {
  return {3 * video_counts_.train, 3 * video_counts_.val, 3 * video_counts_.test};
}

std::vector<std::string> Corpus::ids(Split split) const {
  std::vector<std::string> out;
  for (const auto& v : videos_)
    if (v.split == split) out.push_back(v.video_id);
  return out;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<VideoRecord> videos;
  std::vector<CaptionSet> captions;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto j = parse_line(line, line_no);

    VideoRecord v;
    v.video_id = field<std::string>(j, "video_id", line_no);
    if (v.video_id.empty()) throw DataError("empty video_id", line_no);
    v.source_url = optional_field<std::string>(j, "source_url", "", line_no);
    v.duration_s = field<double>(j, "duration_s", line_no);
    if (!(v.duration_s > 0) || !std::isfinite(v.duration_s))
      throw DataError("duration_s must be positive", line_no);
    auto split_name = field<std::string>(j, "split", line_no);
    auto split = parse_split(split_name);
    if (!split) throw DataError("unknown split value '" + split_name + "'", line_no);
    v.split = *split;

    auto refs = field<std::vector<std::string>>(j, "references", line_no);
    if (refs.size() != 3)
      throw DataError("caption count " + std::to_string(refs.size()) + " != 3 for '" + v.video_id + "'",
                      line_no);
    CaptionSet cs;
    cs.video_id = v.video_id;
    for (std::size_t i = 0; i < 3; ++i) {
      cs.references[i] = trim(refs[i]);
      if (cs.references[i].empty())
        throw DataError("empty reference caption for '" + v.video_id + "'", line_no);
    }
    if (!seen.insert(v.video_id).second)
      throw DataError("duplicate video_id '" + v.video_id + "'", line_no);

    videos.push_back(std::move(v));
    captions.push_back(std::move(cs));
  }
  return Corpus(std::move(videos), std::move(captions));
}

Corpus load_corpus(const std::filesystem::path& index_path) {
  auto in = open(index_path);
  return parse_corpus(in);
}

std::string format_corpus_line(const VideoRecord& video, const CaptionSet& captions) {
  json j;
  j["video_id"] = video.video_id;
  j["source_url"] = video.source_url;
  j["duration_s"] = video.duration_s;
  j["split"] = std::string(to_string(video.split));
  j["references"] = std::vector<std::string>(captions.references.begin(), captions.references.end());
  return j.dump();
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, bool require_template) {
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto j = parse_line(line, line_no);
    AnnotationRecord r;
    r.video_id = field<std::string>(j, "video_id", line_no);
    r.annotator_id = field<std::string>(j, "annotator_id", line_no);
    r.is_metaphor = field<bool>(j, "is_metaphor", line_no);
    r.audio_required = optional_field<bool>(j, "audio_required", false, line_no);
    r.metaphor_span = optional_field<std::string>(j, "metaphor_span", "", line_no);
    r.primary_concept = optional_field<std::string>(j, "primary_concept", "", line_no);
    r.secondary_concept = optional_field<std::string>(j, "secondary_concept", "", line_no);
    r.shared_property = optional_field<std::string>(j, "shared_property", "", line_no);
    r.template_caption = optional_field<std::string>(j, "template_caption", "", line_no);
    r.free_description = optional_field<std::string>(j, "free_description", "", line_no);
    if (require_template && r.is_metaphor) {
      auto pm = parse_caption(r.template_caption);
      if (!pm.ok())
        throw DataError("template_caption does not follow the template (" +
                            std::string(to_string(pm.status)) + "): '" + r.template_caption + "'",
                        line_no);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, bool require_template) {
  auto in = open(path);
  return parse_annotations(in, require_template);
}

std::string format_annotation_line(const AnnotationRecord& r) {
  json j{{"video_id", r.video_id},
         {"annotator_id", r.annotator_id},
         {"is_metaphor", r.is_metaphor},
         {"audio_required", r.audio_required},
         {"metaphor_span", r.metaphor_span},
         {"primary_concept", r.primary_concept},
         {"secondary_concept", r.secondary_concept},
         {"shared_property", r.shared_property},
         {"template_caption", r.template_caption},
         {"free_description", r.free_description}};
  return j.dump();
}

PredictionSet parse_predictions(std::istream& in, std::string model_id, int run_id) {
  if (run_id < 1) throw DataError("run_id must be >= 1");
  PredictionSet set;
  set.model_id = std::move(model_id);
  set.run_id = run_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto j = parse_line(line, line_no);
    auto id = field<std::string>(j, "video_id", line_no);
    auto caption = trim(field<std::string>(j, "caption", line_no));
    if (!set.items.emplace(id, std::move(caption)).second)
      throw DataError("duplicate prediction for '" + id + "'", line_no);
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path, std::string model_id, int run_id) {
  auto in = open(path);
  return parse_predictions(in, std::move(model_id), run_id);
}

void check_predictions(const Corpus& corpus, const PredictionSet& predictions) {
  for (const auto& [id, caption] : predictions.items) {
    const auto* v = corpus.find(id);
    if (!v)
      throw DataError(predictions.model_id + " run " + std::to_string(predictions.run_id) +
                      ": unknown video '" + id + "'");
    if (v->split != Split::test)
      throw DataError(predictions.model_id + " run " + std::to_string(predictions.run_id) +
                      ": video '" + id + "' is not in the test split");
  }
}

std::vector<std::string> unanimity_filter(std::span<const AnnotationRecord> annotations) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const AnnotationRecord*>, std::less<>> by_video;
  for (const auto& r : annotations) {
    auto [it, inserted] = by_video.try_emplace(r.video_id);
    if (inserted) order.push_back(r.video_id);
    it->second.push_back(&r);
  }
  std::vector<std::string> kept;
  for (const auto& id : order) {
    const auto& records = by_video[id];
    if (records.size() != 3)
      throw DataError("video '" + id + "' has " + std::to_string(records.size()) +
                      " annotation records, expected 3");
    if (std::all_of(records.begin(), records.end(), [](const auto* r) { return r->is_metaphor; }))
      kept.push_back(id);
  }
  return kept;
}

std::size_t word_count(std::string_view caption) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : caption) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace {

Histogram histogram(const std::vector<double>& values, double width) {
  if (!(width > 0)) throw std::invalid_argument("histogram bin width must be positive");
  Histogram h;
  h.bin_width = width;
  for (double v : values) {
    auto bin = static_cast<std::size_t>(std::floor(v / width));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

}  // namespace

CorpusStats corpus_stats(const Corpus& corpus, const StatsOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("corpus_stats: empty corpus");
  CorpusStats stats;
  std::vector<double> durations, lengths;
  for (const auto& v : corpus.videos()) durations.push_back(v.duration_s);
  for (const auto& cs : corpus.captions())
    for (const auto& r : cs.references) lengths.push_back(static_cast<double>(word_count(r)));

  double total = 0;
  for (double d : durations) total += d;
  stats.mean_duration_s = total / static_cast<double>(durations.size());
  total = 0;
  for (double l : lengths) total += l;
  stats.mean_caption_len_words = total / static_cast<double>(lengths.size());
  stats.videos = durations.size();
  stats.captions = lengths.size();
  stats.duration_histogram = histogram(durations, options.duration_bin_s);
  stats.length_histogram = histogram(lengths, options.length_bin_words);
  return stats;
}

const std::set<std::string>& default_brand_lexicon() {
  static const std::set<std::string> lexicon{
      "adidas", "amazon", "apple",  "audi",      "bmw",    "coca-cola", "coke",
      "google", "honda",  "ikea",   "mcdonalds", "mcdonald's", "mercedes",  "nike",
      "pepsi",  "puma",   "samsung", "sprite",   "starbucks", "toyota",  "volkswagen"};
  return lexicon;
}

std::vector<BrandWarning> brand_warnings(std::span<const AnnotationRecord> annotations,
                                         const std::set<std::string>& lexicon) {
  std::vector<BrandWarning> out;
  auto scan = [&](const AnnotationRecord& r, const std::string& text) {
    std::string word;
    auto flush = [&] {
      while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.pop_back();
      while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.erase(0, 1);
      if (!word.empty() && lexicon.count(word)) out.push_back({r.video_id, r.annotator_id, word});
      word.clear();
    };
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c)))
        flush();
      else
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    flush();
  };
  for (const auto& r : annotations) {
    scan(r, r.primary_concept);
    scan(r, r.secondary_concept);
    scan(r, r.template_caption);
  }
  return out;
}

std::vector<double> FramePlan::timestamps() const {
  std::vector<double> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

FramePlan plan_frames(double duration_s, FrameStrategy strategy, const FramePositions& positions) {
  if (!(duration_s > 0) || !std::isfinite(duration_s))
    throw std::invalid_argument("plan_frames: duration must be positive");
  if (!(positions.first >= 0 && positions.first < positions.second && positions.second <= 1 &&
        positions.second - positions.first < 1))
    throw std::invalid_argument("plan_frames: positions must satisfy 0 <= first < second <= 1");

  int clips = 1;
  if (strategy.kind == FrameStrategy::Kind::clip_split) {
    clips = strategy.clips;
    if (clips != 1 && clips != 2 && clips != 4 && clips != 6)
      throw std::invalid_argument("plan_frames: unsupported clip count " + std::to_string(clips) +
                                  " (expected 1, 2, 4 or 6)");
  }

  FramePlan plan;
  plan.strategy = strategy;
  const double clip_len = duration_s / clips;
  for (int c = 0; c < clips; ++c) {
    const double start = clip_len * c;
    std::vector<double> group;
    for (int segment = 0; segment < 3; ++segment)
      for (double pos : {positions.first, positions.second})
        group.push_back(start + clip_len * (segment + pos) / 3.0);
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

}  // namespace metaphor_eval
