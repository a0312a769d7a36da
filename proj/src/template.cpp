// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/template.hpp"

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace metaphor_eval {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word(std::string_view token, std::string_view word) { return lower(token) == word; }

bool is_article(std::string_view token) {
  auto t = lower(token);
  return t == "a" || t == "an" || t == "the";
}

bool is_trailing_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'':
      return true;
    default:
      return false;
  }
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string_view trim_caption(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) ||
                        is_trailing_punct(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::no_primary: return "no_primary";
    case ParseStatus::no_secondary: return "no_secondary";
    case ParseStatus::no_property: return "no_property";
    case ParseStatus::not_template: return "not_template";
  }
  return "unknown";
}

std::string ParsedMetaphor::primary_text() const { return join(primary); }
std::string ParsedMetaphor::property_text() const { return join(property); }
std::string ParsedMetaphor::secondary_text() const { return join(secondary); }

bool ParsedMetaphor::same_triple(const ParsedMetaphor& other) const {
  return status == other.status && primary == other.primary && property == other.property &&
         secondary == other.secondary;
}

ParsedMetaphor make_metaphor(std::string_view primary, std::string_view property,
                             std::string_view secondary) {
  ParsedMetaphor pm;
  pm.primary = split_ws(primary);
  pm.property = split_ws(property);
  pm.secondary = split_ws(secondary);
  pm.status = ParseStatus::ok;
  if (pm.primary.empty() || pm.property.empty() || pm.secondary.empty())
    throw std::invalid_argument("make_metaphor: empty span");
  return pm;
}

ParsedMetaphor parse_caption(std::string_view caption) {
  ParsedMetaphor pm;
  const auto tokens = split_ws(trim_caption(caption));

  std::size_t is_pos = tokens.size();
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (is_word(tokens[i], "is") && is_word(tokens[i + 1], "as")) {
      is_pos = i;
      break;
    }
  }
  if (is_pos == tokens.size()) return pm;

  // Property ends at the first "as" after "is as".
  std::size_t as_pos = tokens.size();
  for (std::size_t j = is_pos + 2; j < tokens.size(); ++j) {
    if (is_word(tokens[j], "as")) {
      as_pos = j;
      break;
    }
  }
  if (as_pos == tokens.size()) return pm;

  auto begin = tokens.begin();
  std::vector<std::string> primary(begin, begin + static_cast<std::ptrdiff_t>(is_pos));
  std::vector<std::string> property(begin + static_cast<std::ptrdiff_t>(is_pos) + 2,
                                    begin + static_cast<std::ptrdiff_t>(as_pos));
  std::vector<std::string> secondary(begin + static_cast<std::ptrdiff_t>(as_pos) + 1,
                                     tokens.end());

  if (!primary.empty() && is_article(primary.front())) primary.erase(primary.begin());
  std::string article;
  if (!secondary.empty() && is_article(secondary.front())) {
    article = secondary.front();
    secondary.erase(secondary.begin());
  }

  if (primary.empty())
    pm.status = ParseStatus::no_primary;
  else if (property.empty())
    pm.status = ParseStatus::no_property;
  else if (secondary.empty())
    pm.status = ParseStatus::no_secondary;
  else
    pm.status = ParseStatus::ok;

  pm.primary = std::move(primary);
  pm.property = std::move(property);
  pm.secondary = std::move(secondary);
  pm.secondary_article = std::move(article);
  return pm;
}

std::string render_caption(const ParsedMetaphor& pm) {
  if (!pm.ok())
    throw std::invalid_argument("render_caption: status is " + std::string(to_string(pm.status)));

  std::string article;
  if (pm.secondary_article && lower(*pm.secondary_article) == "the") {
    article = "the";
  } else if (!pm.secondary_article || !pm.secondary_article->empty()) {
    char first = static_cast<char>(std::tolower(static_cast<unsigned char>(pm.secondary.front()[0])));
    article = std::string_view("aeiou").find(first) != std::string_view::npos ? "an" : "a";
  }

  std::ostringstream out;
  out << "The " << pm.primary_text() << " is as " << pm.property_text() << " as ";
  if (!article.empty()) out << article << ' ';
  out << pm.secondary_text();
  return out.str();
}

}  // namespace metaphor_eval
