// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaphor_eval/error.hpp"

namespace metaphor_eval {

enum class Split { train, val, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view s);

struct VideoRecord {
  std::string video_id;
  std::string source_url;
  double duration_s = 0.0;
  Split split = Split::train;
};

struct CaptionSet {
  std::string video_id;
  std::array<std::string, 3> references;  // one per annotator, trimmed
};

// One annotator's answers for one candidate video.
struct AnnotationRecord {
  std::string video_id;
  std::string annotator_id;
  bool is_metaphor = false;        // a
  bool audio_required = false;     // b
  std::string metaphor_span;       // c
  std::string primary_concept;     // d
  std::string secondary_concept;   // e
  std::string shared_property;     // f
  std::string template_caption;    // g
  std::string free_description;    // h
};

struct PredictionSet {
  std::string model_id;
  int run_id = 1;
  std::map<std::string, std::string, std::less<>> items;  // video_id -> caption
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
  std::size_t total() const { return train + val + test; }
};

// Validated and immutable once built.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<VideoRecord> videos, std::vector<CaptionSet> captions);

  std::span<const VideoRecord> videos() const { return videos_; }
  std::span<const CaptionSet> captions() const { return captions_; }

  const VideoRecord* find(std::string_view video_id) const;
  const CaptionSet* captions_for(std::string_view video_id) const;

  SplitCounts video_counts() const { return video_counts_; }
  SplitCounts caption_counts() const;

  std::vector<std::string> ids(Split split) const;
  bool empty() const { return videos_.empty(); }
  std::size_t size() const { return videos_.size(); }

 private:
  std::vector<VideoRecord> videos_;
  std::vector<CaptionSet> captions_;
  std::map<std::string, std::size_t, std::less<>> index_;
  SplitCounts video_counts_;
};

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& index_path);

// One corpus.jsonl line, the inverse of parse_corpus for a single record.
std::string format_corpus_line(const VideoRecord& video, const CaptionSet& captions);

// With `require_template`, metaphor-flagged records whose template caption
// does not parse are rejected.
std::vector<AnnotationRecord> parse_annotations(std::istream& in, bool require_template = true);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               bool require_template = true);
std::string format_annotation_line(const AnnotationRecord& record);

// Lines are {video_id, caption}. Duplicate ids are an error.
PredictionSet parse_predictions(std::istream& in, std::string model_id, int run_id);
PredictionSet load_predictions(const std::filesystem::path& path, std::string model_id, int run_id);

// Throws DataError naming the first prediction whose video is not in the
// test split.
void check_predictions(const Corpus& corpus, const PredictionSet& predictions);

// Videos every annotator marked as metaphoric, in first-seen order. Each
// video must have exactly three records.
std::vector<std::string> unanimity_filter(std::span<const AnnotationRecord> annotations);

struct Histogram {
  double bin_width = 1.0;
  std::vector<std::size_t> counts;  // bin i covers [i*w, (i+1)*w)
};

struct CorpusStats {
  double mean_duration_s = 0.0;
  double mean_caption_len_words = 0.0;
  std::size_t videos = 0;
  std::size_t captions = 0;
  Histogram duration_histogram;
  Histogram length_histogram;
};

struct StatsOptions {
  double duration_bin_s = 10.0;
  double length_bin_words = 1.0;
};

// Caption length counts whitespace-separated words. Empty corpus throws.
CorpusStats corpus_stats(const Corpus& corpus, const StatsOptions& options = {});

std::size_t word_count(std::string_view caption);

// Annotation entries whose concepts or captions mention a brand token. The
// default lexicon is small; pass your own for real audits.
struct BrandWarning {
  std::string video_id;
  std::string annotator_id;
  std::string token;
};

const std::set<std::string>& default_brand_lexicon();
std::vector<BrandWarning> brand_warnings(std::span<const AnnotationRecord> annotations,
                                         const std::set<std::string>& lexicon = default_brand_lexicon());

// ---------------------------------------------------------------------------
// Frame sampling plans (timestamps only).

struct FrameStrategy {
  enum class Kind { three_segment, clip_split };
  Kind kind = Kind::three_segment;
  int clips = 1;  // clip_split only; one of 1, 2, 4, 6

  static FrameStrategy three_segment() { return {}; }
  static FrameStrategy clip_split(int k) { return {Kind::clip_split, k}; }
};

// Relative positions of the two frames inside each third of a clip.
struct FramePositions {
  double first = 1.0 / 3.0;
  double second = 2.0 / 3.0;
};

struct FramePlan {
  FrameStrategy strategy;
  std::vector<std::vector<double>> groups;  // one group of 6 per clip

  std::vector<double> timestamps() const;
};

FramePlan plan_frames(double duration_s, FrameStrategy strategy = {},
                      const FramePositions& positions = {});

}  // namespace metaphor_eval
