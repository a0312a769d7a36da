// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "metaphor_eval/runner.hpp"

namespace metaphor_eval {

using nlohmann::json;

std::vector<std::string> AssignmentPlan::all_videos() const {
  std::vector<std::string> out = shared;
  for (const auto& a : annotators) {
    const auto& list = per_annotator.at(a);
    out.insert(out.end(), list.begin() + static_cast<std::ptrdiff_t>(shared.size()), list.end());
  }
  return out;
}

AssignmentPlan assign(std::span<const std::string> videos, std::span<const std::string> annotators,
                      std::size_t n_per_annotator, std::size_t n_shared, std::uint64_t seed) {
  if (annotators.empty()) throw std::invalid_argument("assign: no annotators");
  if (n_shared > n_per_annotator)
    throw std::invalid_argument("assign: shared block (" + std::to_string(n_shared) +
                                ") larger than per-annotator load (" +
                                std::to_string(n_per_annotator) + ")");
  if (std::set<std::string>(annotators.begin(), annotators.end()).size() != annotators.size())
    throw std::invalid_argument("assign: duplicate annotator id");

  std::vector<std::string> pool(videos.begin(), videos.end());
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end())
    throw std::invalid_argument("assign: duplicate video id");

  const std::size_t needed = n_shared + annotators.size() * (n_per_annotator - n_shared);
  if (needed > pool.size())
    throw std::invalid_argument("assign: plan needs " + std::to_string(needed) +
                                " distinct videos, only " + std::to_string(pool.size()) + " given");

  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);

  AssignmentPlan plan;
  plan.seed = seed;
  plan.annotators.assign(annotators.begin(), annotators.end());
  plan.shared.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_shared));
  auto next = pool.begin() + static_cast<std::ptrdiff_t>(n_shared);
  const auto private_len = static_cast<std::ptrdiff_t>(n_per_annotator - n_shared);
  for (const auto& a : plan.annotators) {
    auto& list = plan.per_annotator[a];
    list = plan.shared;
    list.insert(list.end(), next, next + private_len);
    next += private_len;
  }
  return plan;
}

std::string plan_to_json(const AssignmentPlan& plan) {
  json j;
  j["seed"] = plan.seed;
  j["annotators"] = plan.annotators;
  j["shared"] = plan.shared;
  j["per_annotator"] = plan.per_annotator;
  return j.dump(2) + "\n";
}

AssignmentPlan plan_from_json(std::string_view text) {
  AssignmentPlan plan;
  try {
    auto j = json::parse(text);
    plan.seed = j.value("seed", std::uint64_t{0});
    plan.annotators = j.at("annotators").get<std::vector<std::string>>();
    plan.shared = j.at("shared").get<std::vector<std::string>>();
    plan.per_annotator = j.at("per_annotator").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad assignment plan: ") + e.what());
  }
  for (const auto& a : plan.annotators) {
    auto it = plan.per_annotator.find(a);
    if (it == plan.per_annotator.end()) throw DataError("assignment plan has no list for " + a);
    const auto& list = it->second;
    if (list.size() < plan.shared.size() ||
        !std::equal(plan.shared.begin(), plan.shared.end(), list.begin()))
      throw DataError("assignment list for " + a + " does not start with the shared block");
  }
  return plan;
}

}  // namespace metaphor_eval
