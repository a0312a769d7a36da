// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

// Fixture builders shared by the unit tests and the acceptance suite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "metaphor_eval/corpus.hpp"
#include "metaphor_eval/ngram.hpp"
#include "metaphor_eval/stats.hpp"
#include "metaphor_eval/template.hpp"

namespace mtest {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& path, const std::string& text);
std::string read_file(const fs::path& path);

// Directory holding the committed fixture files.
fs::path data_dir();

// Corpus shaped like the released dataset: 705 videos split 400/55/250, three
// templated captions each, mean duration 54 s (38070 s total) and 18824
// caption words (mean 8.9).
struct VmcdFixture {
  std::vector<metaphor_eval::VideoRecord> videos;
  std::vector<metaphor_eval::CaptionSet> captions;
  // Three records per candidate video: the 705 corpus videos are marked
  // metaphoric by everyone, 40 rejected candidates are not.
  std::vector<metaphor_eval::AnnotationRecord> annotations;

  static constexpr std::size_t kVideos = 705;
  static constexpr double kTotalDuration = 38070.0;
  static constexpr std::size_t kTotalWords = 18824;
  static constexpr std::size_t kRejected = 40;

  std::string corpus_jsonl() const;
  std::string annotations_jsonl() const;
};

VmcdFixture vmcd_fixture();

// Small corpus used by the end-to-end tests: 6 test videos, 2 train videos.
struct MiniFixture {
  std::string corpus_jsonl;
  std::string self_predictions;  // reference 1 for every test video
  std::string model_predictions;
  std::string partial_predictions;  // covers 4 of the 6 test videos
};

MiniFixture mini_fixture();

// Random toy corpus: `pairs` items, each with a hypothesis and references of
// 1..max_len tokens drawn from a vocabulary of `vocab` words.
std::vector<metaphor_eval::TokenizedPair> random_corpus(std::mt19937_64& rng, std::size_t pairs,
                                                        std::size_t refs, std::size_t vocab,
                                                        std::size_t max_len);

// Lowercase word of 2..8 letters that is never "is", "as" or an article.
std::string random_word(std::mt19937_64& rng);

metaphor_eval::JudgmentLabel make_label(std::string video, std::string model, std::string annotator,
                                        bool fluency, bool creativity, bool pcc, bool consistency,
                                        std::int64_t ms = 0);

}  // namespace mtest
