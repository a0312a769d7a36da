// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "fixtures.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include <json.hpp>

#ifndef METAPHOR_EVAL_TEST_DATA
#error "METAPHOR_EVAL_TEST_DATA must point at tests/data"
#endif

namespace mtest {

using namespace metaphor_eval;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("metaphor-eval-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
           std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path data_dir() { return METAPHOR_EVAL_TEST_DATA; }

namespace {

constexpr std::array kPrimary{"dog",   "car",   "river", "child", "train", "cat",   "storm",
                              "horse", "truck", "bird",  "road",  "city",  "baby",  "boat",
                              "kite",  "lamp",  "tree",  "wolf",  "cloud", "crowd", "mountain"};
constexpr std::array kProperty{"fast",  "white", "bright", "quiet", "strong", "calm",  "loud",
                               "cold",  "warm",  "soft",   "tall",  "busy",   "smooth", "sharp",
                               "heavy", "light", "slow",   "happy", "old",    "wild"};
constexpr std::array kSecondary{"cheetah", "rocket", "owl",    "eagle",  "ox",      "mouse",
                                "lion",    "arrow",  "oven",   "ant",    "elephant", "feather",
                                "giant",   "robot",  "island", "engine", "umbrella", "tiger"};
constexpr std::array kMass{"snow", "ice", "fire", "honey", "silk", "steel", "gold", "glass", "thunder", "water"};
constexpr std::array kAdjective{"small", "old", "red", "tiny", "busy", "blue", "young", "empty", "huge"};

const char* article_for(std::string_view word) {
  return std::string_view("aeiou").find(word.front()) != std::string_view::npos ? "an" : "a";
}

template <std::size_t N>
const char* pick(const std::array<const char*, N>& words, std::size_t i) {
  return words[i % N];
}

std::string templated_caption(std::size_t video, std::size_t ref, std::size_t words) {
  const std::size_t k = video * 3 + ref;
  std::string pc = pick(kPrimary, video + ref * 5);
  std::string prop = pick(kProperty, k * 7 + 3);
  std::string sc = pick(kSecondary, k * 5 + video);
  std::string adj1 = pick(kAdjective, k);
  std::string adj2 = pick(kAdjective, k + 4);
  std::string adj3 = pick(kAdjective, k + 2);
  switch (words) {
    case 7:
      return "The " + pc + " is as " + prop + " as " + pick(kMass, k);
    case 8:
      return "The " + pc + " is as " + prop + " as " + article_for(sc) + " " + sc;
    case 9:
      return "The " + adj1 + " " + pc + " is as " + prop + " as " + article_for(sc) + " " + sc;
    case 10:
      return "The " + adj1 + " " + adj2 + " " + pc + " is as " + prop + " as " + article_for(sc) + " " + sc;
    case 11:
      return "The " + adj1 + " " + adj2 + " " + pc + " is as " + prop + " as " + article_for(adj3) + " " +
             adj3 + " " + sc;
  }
  throw std::logic_error("unsupported caption length");
}

std::string annotator_name(std::size_t i) { return "ann" + std::to_string(i + 1); }

AnnotationRecord annotation(const std::string& video, std::size_t annotator, bool metaphor,
                            const std::string& caption) {
  AnnotationRecord r;
  r.video_id = video;
  r.annotator_id = annotator_name(annotator);
  r.is_metaphor = metaphor;
  if (metaphor) {
    auto pm = parse_caption(caption);
    r.metaphor_span = "0-10";
    r.primary_concept = pm.primary_text();
    r.secondary_concept = pm.secondary_text();
    r.shared_property = pm.property_text();
    r.template_caption = caption;
    r.free_description = "A scene that suggests: " + caption;
  }
  return r;
}

}  // namespace

VmcdFixture vmcd_fixture() {
  VmcdFixture f;
  f.videos.reserve(VmcdFixture::kVideos);
  std::size_t shortened = 0;
  for (std::size_t i = 0; i < VmcdFixture::kVideos; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "vmcd-%04zu", i + 1);
    VideoRecord v;
    v.video_id = id;
    v.source_url = std::string("https://www.youtube.com/watch?v=") + id;
    // Offsets cancel in pairs, so the durations sum to 705 * 54.
    const double offset = static_cast<double>((i / 2) % 30);
    v.duration_s = i + 1 == VmcdFixture::kVideos ? 54.0 : (i % 2 == 0 ? 54.0 + offset : 54.0 - offset);
    v.split = i < 400 ? Split::train : (i < 455 ? Split::val : Split::test);

    CaptionSet c;
    c.video_id = v.video_id;
    for (std::size_t r = 0; r < 3; ++r) {
      // Lengths cycle 7..11 (mean 9); the first 211 eleven-word captions
      // drop a word to bring the total to 18824.
      std::size_t words = 7 + (i * 3 + r) % 5;
      if (words == 11 && shortened < 211) {
        words = 10;
        ++shortened;
      }
      c.references[r] = templated_caption(i, r, words);
    }
    for (std::size_t a = 0; a < 3; ++a) f.annotations.push_back(annotation(v.video_id, a, true, c.references[a]));
    f.videos.push_back(std::move(v));
    f.captions.push_back(std::move(c));
  }
  constexpr std::array<std::array<bool, 3>, 4> kRejectedFlags{
      {{true, true, false}, {true, false, true}, {false, true, false}, {false, false, false}}};
  for (std::size_t i = 0; i < VmcdFixture::kRejected; ++i) {
    const std::string id = "cand-" + std::to_string(i + 1);
    const auto& flags = kRejectedFlags[i % kRejectedFlags.size()];
    for (std::size_t a = 0; a < 3; ++a)
      f.annotations.push_back(annotation(id, a, flags[a], "The cup is as red as a rose"));
  }
  return f;
}

std::string VmcdFixture::corpus_jsonl() const {
  std::string out;
  for (std::size_t i = 0; i < videos.size(); ++i) out += format_corpus_line(videos[i], captions[i]) + "\n";
  return out;
}

std::string VmcdFixture::annotations_jsonl() const {
  std::string out;
  for (const auto& a : annotations) out += format_annotation_line(a) + "\n";
  return out;
}

MiniFixture mini_fixture() {
  struct Row {
    const char* id;
    const char* split;
    double duration;
    std::array<const char*, 3> refs;
  };
  const std::array<Row, 8> rows{{
      {"t1", "test", 30, {"The blanket is as white as snow", "The sheet is as pale as milk", "The blanket is as soft as a cloud"}},
      {"t2", "test", 45, {"The car is as fast as a cheetah", "The car is as quick as lightning", "The car is as swift as an arrow"}},
      {"t3", "test", 61, {"The baby is as calm as a lake", "The child is as peaceful as an angel", "The baby is as quiet as a mouse"}},
      {"t4", "test", 20, {"The city is as busy as a beehive", "The street is as crowded as an anthill", "The city is as loud as thunder"}},
      {"t5", "test", 75, {"The man is as strong as an ox", "The lifter is as mighty as a bull", "The man is as sturdy as a rock"}},
      {"t6", "test", 52, {"The sunset is as red as fire", "The sky is as orange as a tangerine", "The sunset is as warm as an oven"}},
      {"v7", "train", 40, {"The kite is as light as a feather", "The kite is as free as a bird", "The kite is as high as a cloud"}},
      {"v8", "val", 33, {"The river is as clear as glass", "The water is as blue as the sky", "The river is as calm as a mirror"}},
  }};
  MiniFixture f;
  for (const auto& r : rows) {
    nlohmann::json j{{"video_id", r.id},
                     {"source_url", std::string("https://example.org/") + r.id},
                     {"duration_s", r.duration},
                     {"split", r.split},
                     {"references", {r.refs[0], r.refs[1], r.refs[2]}}};
    f.corpus_jsonl += j.dump() + "\n";
    if (std::string_view(r.split) == "test")
      f.self_predictions += nlohmann::json{{"video_id", r.id}, {"caption", r.refs[0]}}.dump() + "\n";
  }
  const std::array<std::pair<const char*, const char*>, 6> model{{
      {"t1", "The blanket is as white as a ghost"},
      {"t2", "The car is as fast as a rocket"},
      {"t3", "A baby sleeping in a crib"},
      {"t4", "The city is as busy as an ant colony"},
      {"t5", "The man is as strong as a man"},
      {"t6", "The sunset is as red as blood"},
  }};
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto line = nlohmann::json{{"video_id", model[i].first}, {"caption", model[i].second}}.dump() + "\n";
    f.model_predictions += line;
    if (i < 4) f.partial_predictions += line;
  }
  return f;
}

std::vector<TokenizedPair> random_corpus(std::mt19937_64& rng, std::size_t pairs, std::size_t refs,
                                         std::size_t vocab, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1), len(1, max_len);
  auto sentence = [&] {
    Tokens t(len(rng));
    for (auto& w : t) w = "w" + std::to_string(word(rng));
    return t;
  };
  std::vector<TokenizedPair> out(pairs);
  for (auto& p : out) {
    p.hypothesis = sentence();
    for (std::size_t r = 0; r < refs; ++r) p.references.push_back(sentence());
  }
  return out;
}

std::string random_word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 8), letter('a', 'z');
  for (;;) {
    std::string w(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : w) c = static_cast<char>(letter(rng));
    if (w != "is" && w != "as" && w != "an" && w != "the") return w;
  }
}

JudgmentLabel make_label(std::string video, std::string model, std::string annotator, bool fluency,
                         bool creativity, bool pcc, bool consistency, std::int64_t ms) {
  JudgmentLabel l;
  l.video_id = std::move(video);
  l.model_id = std::move(model);
  l.annotator_id = std::move(annotator);
  l.fluency = fluency;
  l.creativity = creativity;
  l.primary_concept_consistency = pcc;
  l.consistency = consistency;
  l.timestamp = Timestamp{std::chrono::milliseconds{ms}};
  return l;
}

}  // namespace mtest
