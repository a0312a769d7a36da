// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

// Hand-built parser expectations. Spans are space-joined; empty means the
// span is expected to be empty.

#pragma once

#include <array>

#include "metaphor_eval/template.hpp"

namespace mtest {

struct TemplateCase {
  const char* caption;
  metaphor_eval::ParseStatus status;
  const char* primary;
  const char* property;
  const char* secondary;
};

inline constexpr std::size_t kNonTemplateCases = 10;

inline const std::array<TemplateCase, 50>& template_cases() {
  using S = metaphor_eval::ParseStatus;
  static const std::array<TemplateCase, 50> cases{{
      {"The blanket is as white as snow", S::ok, "blanket", "white", "snow"},
      {"The car is as fast as a cheetah", S::ok, "car", "fast", "cheetah"},
      {"The dog is as fast as a cheetah.", S::ok, "dog", "fast", "cheetah"},
      {"the sun is as bright as a diamond!", S::ok, "sun", "bright", "diamond"},
      {"THE OWL IS AS WISE AS AN ELDER", S::ok, "OWL", "WISE", "ELDER"},
      {"An apple is as red as a rose", S::ok, "apple", "red", "rose"},
      {"A baby is as calm as the sea", S::ok, "baby", "calm", "sea"},
      {"Snow is as white as milk", S::ok, "Snow", "white", "milk"},
      {"The old man is as strong as an ox", S::ok, "old man", "strong", "ox"},
      {"The small brown dog is as fast as a hungry cheetah", S::ok, "small brown dog", "fast", "hungry cheetah"},
      {"The runner is as fast as a cheetah chasing a gazelle", S::ok, "runner", "fast", "cheetah chasing a gazelle"},
      {"The man is as tall as a tree as old as time", S::ok, "man", "tall", "tree as old as time"},
      {"The river is as wide as the sea is as deep", S::ok, "river", "wide", "sea is as deep"},
      {"The kid is as quick as as a fox", S::ok, "kid", "quick", "as a fox"},
      {"The truck is as heavy as an elephant, ", S::ok, "truck", "heavy", "elephant"},
      {"  The lamp is as bright as the sun  ", S::ok, "lamp", "bright", "sun"},
      {"The cake is as sweet as honey...", S::ok, "cake", "sweet", "honey"},
      {"The night is as dark as ink!?", S::ok, "night", "dark", "ink"},
      {"The girl is as light as a feather;", S::ok, "girl", "light", "feather"},
      {"The storm is as loud as thunder:", S::ok, "storm", "loud", "thunder"},
      {"The cheetah Is As fast As a car", S::ok, "cheetah", "fast", "car"},
      {"The crowd is as busy as bees in a hive", S::ok, "crowd", "busy", "bees in a hive"},
      {"The child is as happy as a lark", S::ok, "child", "happy", "lark"},
      {"The water is as clear as crystal", S::ok, "water", "clear", "crystal"},
      {"The coffee is as black as night", S::ok, "coffee", "black", "night"},
      {"The ice is as cold and hard as steel", S::ok, "ice", "cold and hard", "steel"},
      {"The tower is as very tall as a giant", S::ok, "tower", "very tall", "giant"},
      {"The boat is as steady as a rock.", S::ok, "boat", "steady", "rock"},
      {"The athlete is as strong as the strongest bull", S::ok, "athlete", "strong", "strongest bull"},
      {"The a cat is as quiet as a mouse", S::ok, "a cat", "quiet", "mouse"},
      {"The elephant is as big as a a house", S::ok, "elephant", "big", "a house"},
      {"My car is as fast as a jet", S::ok, "My car", "fast", "jet"},
      {"The dog is as fast as the", S::no_secondary, "dog", "fast", ""},
      {"is as fast as a cheetah", S::no_primary, "", "fast", "cheetah"},
      {"The is as fast as a cheetah", S::no_primary, "", "fast", "cheetah"},
      {"The car is as as a cheetah", S::no_property, "car", "", "cheetah"},
      {"The car is as fast as", S::no_secondary, "car", "fast", ""},
      {"The car is as fast as a", S::no_secondary, "car", "fast", ""},
      {"is as as", S::no_primary, "", "", ""},
      {"The car is as fast", S::not_template, "", "", ""},
      // Non-template strings.
      {"a scenic view of mountains", S::not_template, "", "", ""},
      {"", S::not_template, "", "", ""},
      {"The car is fast like a cheetah", S::not_template, "", "", ""},
      {"The car is as", S::not_template, "", "", ""},
      {"The car was as fast as a cheetah", S::not_template, "", "", ""},
      {"As fast as a cheetah", S::not_template, "", "", ""},
      {"The dog isas fast as a cat", S::not_template, "", "", ""},
      {"This is a dog running fast", S::not_template, "", "", ""},
      {"The sky is blue as the ocean", S::not_template, "", "", ""},
      {"   ...   ", S::not_template, "", "", ""},
  }};
  return cases;
}

// True when `pm` matches the expectation field for field.
inline bool matches(const TemplateCase& c, const metaphor_eval::ParsedMetaphor& pm) {
  return pm.status == c.status && pm.primary_text() == c.primary && pm.property_text() == c.property &&
         pm.secondary_text() == c.secondary;
}

}  // namespace mtest
