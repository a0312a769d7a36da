// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#include "metaphor_eval/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "metaphor_eval/ngram.hpp"

namespace metaphor_eval {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::uint64_t seed, std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : text) mix(static_cast<unsigned char>(c));
  return h;
}

void require_text(std::string_view text) {
  if (text.empty()) throw EmbeddingError("cannot embed empty text", false);
}

Granularity parse_granularity(const std::string& s, std::size_t line) {
  if (s == "sentence") return Granularity::sentence;
  if (s == "token") return Granularity::token;
  throw DataError("unknown granularity '" + s + "'", line);
}

}  // namespace

EmbeddingVector normalize(EmbeddingVector v) {
  double norm = 0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0) {
    v.normalized = false;
    return v;
  }
  for (double& x : v.values) x /= norm;
  v.normalized = true;
  return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::file_store: return "file_store";
    case ProviderKind::remote_http: return "remote_http";
    case ProviderKind::deterministic_test: return "deterministic_test";
  }
  return "unknown";
}

std::string_view to_string(Granularity g) {
  return g == Granularity::sentence ? "sentence" : "token";
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_sentences(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_sentence(t));
  return out;
}

// ---------------------------------------------------------------------------
// DeterministicProvider

DeterministicProvider::DeterministicProvider(std::uint64_t seed, std::size_t dim)
    : seed_(seed), dim_(dim) {
  if (dim == 0) throw std::invalid_argument("DeterministicProvider: dim must be positive");
}

ProviderDescriptor DeterministicProvider::descriptor() const {
  return {ProviderKind::deterministic_test,
          "deterministic-test-seed" + std::to_string(seed_) + "-dim" + std::to_string(dim_), dim_};
}

EmbeddingVector DeterministicProvider::embed_sentence(std::string_view text) {
  require_text(text);
  std::mt19937_64 gen(fnv1a(seed_, text));
  EmbeddingVector v;
  v.values.resize(dim_);
  // Top 53 bits to a double in [-1, 1); avoids implementation-defined
  // distribution algorithms so vectors are identical across toolchains.
  for (double& x : v.values) x = static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0;
  return normalize(std::move(v));
}

std::vector<TokenEmbedding> DeterministicProvider::embed_tokens(std::string_view text) {
  require_text(text);
  std::vector<TokenEmbedding> out;
  for (auto& tok : tokenize(text)) {
    auto vec = embed_sentence(tok);
    out.push_back({std::move(tok), std::move(vec)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// file_store

StoreEntry parse_store_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  StoreEntry entry;
  try {
    entry.text = j.at("text").get<std::string>();
    entry.granularity = parse_granularity(j.value("granularity", std::string("sentence")), line_no);
    if (j.contains("tokens") && !j["tokens"].is_null())
      entry.tokens = j["tokens"].get<std::vector<std::string>>();
    entry.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad store entry: ") + e.what(), line_no);
  }
  return entry;
}

std::string format_store_line(const StoreEntry& entry) {
  json j;
  j["text"] = entry.text;
  j["granularity"] = std::string(to_string(entry.granularity));
  if (entry.granularity == Granularity::token) j["tokens"] = entry.tokens;
  j["vectors"] = entry.vectors;
  return j.dump();
}

FileStoreProvider FileStoreProvider::load(const std::filesystem::path& path, std::string model_name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding store " + path.string());
  FileStoreProvider store;
  store.model_name_ = model_name.empty() ? "file:" + path.filename().string() : std::move(model_name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    store.add(parse_store_line(line, line_no), line_no);
  }
  return store;
}

FileStoreProvider FileStoreProvider::from_entries(std::vector<StoreEntry> entries,
                                                  std::string model_name) {
  FileStoreProvider store;
  store.model_name_ = model_name.empty() ? "file:in-memory" : std::move(model_name);
  std::size_t i = 0;
  for (auto& e : entries) store.add(std::move(e), ++i);
  return store;
}

void FileStoreProvider::add(StoreEntry entry, std::size_t line) {
  for (const auto& v : entry.vectors) {
    if (v.empty()) throw DataError("empty vector for '" + entry.text + "'", line);
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_)
      throw DataError("vector dim " + std::to_string(v.size()) + " differs from store dim " +
                          std::to_string(dim_), line);
  }
  if (entry.granularity == Granularity::sentence) {
    if (entry.vectors.size() != 1)
      throw DataError("sentence entry needs exactly one vector", line);
    sentences_[entry.text] = normalize(EmbeddingVector{std::move(entry.vectors.front()), false});
  } else {
    if (entry.tokens.size() != entry.vectors.size() || entry.tokens.empty())
      throw DataError("token entry needs one vector per token", line);
    std::vector<TokenEmbedding> toks;
    for (std::size_t i = 0; i < entry.tokens.size(); ++i)
      toks.push_back({entry.tokens[i], normalize(EmbeddingVector{std::move(entry.vectors[i]), false})});
    tokens_[entry.text] = std::move(toks);
  }
}

ProviderDescriptor FileStoreProvider::descriptor() const {
  return {ProviderKind::file_store, model_name_, dim_};
}

EmbeddingVector FileStoreProvider::embed_sentence(std::string_view text) {
  require_text(text);
  auto it = sentences_.find(text);
  if (it == sentences_.end())
    throw EmbeddingError("no stored sentence embedding for '" + std::string(text) + "'", false);
  return it->second;
}

std::vector<TokenEmbedding> FileStoreProvider::embed_tokens(std::string_view text) {
  require_text(text);
  auto it = tokens_.find(text);
  if (it == tokens_.end())
    throw EmbeddingError("no stored token embeddings for '" + std::string(text) + "'", false);
  return it->second;
}

// ---------------------------------------------------------------------------
// RemoteProvider

struct RemoteProvider::Impl {
  std::string host;  // scheme://host:port
  std::string prefix;
  RemoteOptions options;
  std::counting_semaphore<1024> slots;
  mutable std::mutex mu;
  std::string model_name = "remote";
  std::size_t dim = 0;

  Impl(std::string h, std::string p, RemoteOptions o)
      : host(std::move(h)),
        prefix(std::move(p)),
        options(std::move(o)),
        slots(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_in_flight, 1, 1024))) {}

  json post(const json& body) {
    slots.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots};

    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!options.token.empty()) headers.emplace("Authorization", "Bearer " + options.token);

    std::string last_error;
    const int attempts = options.retries + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      httplib::Client client(host);
      auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
      auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());

      auto res = client.Post(prefix + "/embed", headers, payload, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        try {
          return json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw EmbeddingError(std::string("malformed embed response: ") + e.what(), false, attempt);
        }
      } else if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        throw EmbeddingError("embed request rejected: HTTP " + std::to_string(res->status) + " " +
                                 res->body,
                             false, attempt);
      }
      if (attempt < attempts) std::this_thread::sleep_for(options.backoff * attempt);
    }
    throw EmbeddingError("embedding provider unavailable after " + std::to_string(attempts) +
                             " attempt(s): " + last_error,
                         true, attempts);
  }

  void record_meta(const json& reply) {
    std::lock_guard lock(mu);
    if (reply.contains("model") && reply["model"].is_string()) model_name = reply["model"];
    if (reply.contains("dim") && reply["dim"].is_number_unsigned()) {
      auto d = reply["dim"].get<std::size_t>();
      if (dim != 0 && d != dim)
        throw EmbeddingError("provider changed dim from " + std::to_string(dim) + " to " +
                                 std::to_string(d), false);
      dim = d;
    }
  }

  EmbeddingVector to_vector(const json& values) const {
    EmbeddingVector v{values.get<std::vector<double>>(), false};
    std::lock_guard lock(mu);
    if (dim != 0 && v.dim() != dim)
      throw EmbeddingError("reply vector has dim " + std::to_string(v.dim()) + ", expected " +
                               std::to_string(dim), false);
    return normalize(std::move(v));
  }
};

RemoteProvider::RemoteProvider(std::string base_url, RemoteOptions options) {
  std::string host = base_url, prefix;
  auto scheme = base_url.find("://");
  auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start != std::string::npos) {
    host = base_url.substr(0, path_start);
    prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
  impl_ = std::make_unique<Impl>(std::move(host), std::move(prefix), std::move(options));
}

RemoteProvider::~RemoteProvider() = default;

ProviderDescriptor RemoteProvider::descriptor() const {
  std::lock_guard lock(impl_->mu);
  return {ProviderKind::remote_http, impl_->model_name, impl_->dim};
}

std::vector<EmbeddingVector> RemoteProvider::embed_sentences(std::span<const std::string> texts) {
  for (const auto& t : texts) require_text(t);
  if (texts.empty()) return {};
  json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())},
            {"granularity", "sentence"}};
  auto reply = impl_->post(body);
  try {
    impl_->record_meta(reply);
    const auto& embs = reply.at("embeddings");
    if (!embs.is_array() || embs.size() != texts.size())
      throw EmbeddingError("embed response has wrong number of embeddings", false);
    std::vector<EmbeddingVector> out;
    for (const auto& e : embs) out.push_back(impl_->to_vector(e));
    return out;
  } catch (const json::exception& e) {
    throw EmbeddingError(std::string("malformed embed response: ") + e.what(), false);
  }
}

EmbeddingVector RemoteProvider::embed_sentence(std::string_view text) {
  std::string t(text);
  return embed_sentences(std::span<const std::string>(&t, 1)).front();
}

std::vector<TokenEmbedding> RemoteProvider::embed_tokens(std::string_view text) {
  require_text(text);
  json body{{"texts", {std::string(text)}}, {"granularity", "token"}};
  auto reply = impl_->post(body);
  try {
    impl_->record_meta(reply);
    const auto& embs = reply.at("embeddings");
    const auto& toks = reply.at("tokens");
    if (embs.size() != 1 || toks.size() != 1 || embs[0].size() != toks[0].size())
      throw EmbeddingError("token embed response is misaligned", false);
    std::vector<TokenEmbedding> out;
    for (std::size_t i = 0; i < embs[0].size(); ++i)
      out.push_back({toks[0][i].get<std::string>(), impl_->to_vector(embs[0][i])});
    return out;
  } catch (const json::exception& e) {
    throw EmbeddingError(std::string("malformed embed response: ") + e.what(), false);
  }
}

// ---------------------------------------------------------------------------
// CachedProvider

CachedProvider::CachedProvider(std::shared_ptr<EmbeddingProvider> inner) : inner_(std::move(inner)) {
  if (!inner_) throw std::invalid_argument("CachedProvider: null provider");
}

ProviderDescriptor CachedProvider::descriptor() const { return inner_->descriptor(); }

EmbeddingVector CachedProvider::embed_sentence(std::string_view text) {
  {
    std::lock_guard lock(mu_);
    if (auto it = sentences_.find(text); it != sentences_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto v = inner_->embed_sentence(text);
  std::lock_guard lock(mu_);
  ++misses_;
  return sentences_.emplace(std::string(text), std::move(v)).first->second;
}

std::vector<TokenEmbedding> CachedProvider::embed_tokens(std::string_view text) {
  {
    std::lock_guard lock(mu_);
    if (auto it = tokens_.find(text); it != tokens_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto v = inner_->embed_tokens(text);
  std::lock_guard lock(mu_);
  ++misses_;
  return tokens_.emplace(std::string(text), std::move(v)).first->second;
}

void CachedProvider::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write embedding store " + path.string());
  for (const auto& [text, vec] : sentences_)
    out << format_store_line({text, Granularity::sentence, {}, {vec.values}}) << '\n';
  for (const auto& [text, toks] : tokens_) {
    StoreEntry e{text, Granularity::token, {}, {}};
    for (const auto& t : toks) {
      e.tokens.push_back(t.token);
      e.vectors.push_back(t.vector.values);
    }
    out << format_store_line(e) << '\n';
  }
}

std::size_t CachedProvider::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t CachedProvider::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

// ---------------------------------------------------------------------------

std::shared_ptr<EmbeddingProvider> make_provider(std::string_view spec, const RemoteOptions& remote) {
  auto with_token = [&remote] {
    RemoteOptions opts = remote;
    if (opts.token.empty())
      if (const char* tok = std::getenv("METAPHOR_EVAL_PROVIDER_TOKEN")) opts.token = tok;
    return opts;
  };

  if (spec.starts_with("http://") || spec.starts_with("https://"))
    return std::make_shared<CachedProvider>(
        std::make_shared<RemoteProvider>(std::string(spec), with_token()));
  if (spec.starts_with("http:")) {
    std::string url(spec.substr(5));
    if (url.find("://") == std::string::npos) url = "http://" + url;
    return std::make_shared<CachedProvider>(std::make_shared<RemoteProvider>(url, with_token()));
  }
  if (spec.starts_with("file:"))
    return std::make_shared<FileStoreProvider>(FileStoreProvider::load(std::string(spec.substr(5))));
  if (spec.starts_with("test:")) {
    auto rest = std::string(spec.substr(5));
    std::uint64_t seed = 0;
    std::size_t dim = 16;
    try {
      auto colon = rest.find(':');
      seed = std::stoull(rest.substr(0, colon));
      if (colon != std::string::npos) dim = std::stoul(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad test provider spec '" + std::string(spec) + "'");
    }
    return std::make_shared<DeterministicProvider>(seed, dim);
  }
  throw std::invalid_argument("unknown provider spec '" + std::string(spec) +
                              "' (expected file:PATH, http:URL or test:SEED)");
}

}  // namespace metaphor_eval
