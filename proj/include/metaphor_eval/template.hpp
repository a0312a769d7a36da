// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metaphor_eval {

enum class ParseStatus { ok, no_primary, no_secondary, no_property, not_template };

std::string_view to_string(ParseStatus status);

// A caption of the form "<primary> is as <property> as <secondary>".
//
// Spans keep the caption's original casing. Leading articles are removed
// from the two concepts; the article found in front of the secondary
// concept is kept in `secondary_article` so rendering can reproduce mass
// nouns ("as white as snow") without inventing an article.
struct ParsedMetaphor {
  std::vector<std::string> primary;
  std::vector<std::string> property;
  std::vector<std::string> secondary;
  ParseStatus status = ParseStatus::not_template;

  // nullopt: triple was built in code, not parsed. "" means no article.
  std::optional<std::string> secondary_article;

  bool ok() const { return status == ParseStatus::ok; }

  std::string primary_text() const;
  std::string property_text() const;
  std::string secondary_text() const;

  // Compares the three spans and the status; article metadata is ignored.
  bool same_triple(const ParsedMetaphor& other) const;
};

// Builds an ok metaphor from whitespace-separated phrases.
ParsedMetaphor make_metaphor(std::string_view primary, std::string_view property,
                             std::string_view secondary);

// Total: never throws, failures are reported through `status`.
ParsedMetaphor parse_caption(std::string_view caption);

// "The <primary> is as <property> as <article> <secondary>".
// Throws std::invalid_argument unless `pm.ok()`.
std::string render_caption(const ParsedMetaphor& pm);

}  // namespace metaphor_eval
