// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaphor_eval/error.hpp"

namespace metaphor_eval {

struct EmbeddingVector {
  std::vector<double> values;
  bool normalized = false;

  std::size_t dim() const { return values.size(); }
};

// Returns a unit-length copy. A zero vector is returned unchanged and
// stays `normalized == false`.
EmbeddingVector normalize(EmbeddingVector v);

// Cosine similarity clamped to [-1, 1]. Zero vectors give 0.
// Throws std::invalid_argument on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct TokenEmbedding {
  std::string token;
  EmbeddingVector vector;
};

enum class ProviderKind { file_store, remote_http, deterministic_test };

std::string_view to_string(ProviderKind kind);

struct ProviderDescriptor {
  ProviderKind kind = ProviderKind::deterministic_test;
  std::string model_name;
  std::size_t dim = 0;
};

enum class Granularity { sentence, token };

std::string_view to_string(Granularity g);

// `transient` failures (timeouts, 5xx, connection refused) may succeed on a
// later attempt; permanent ones (cache miss, 4xx, malformed reply) will not.
class EmbeddingError : public Error {
 public:
  EmbeddingError(const std::string& what, bool transient, int attempts = 1)
      : Error(what), transient_(transient), attempts_(attempts) {}

  bool transient() const noexcept { return transient_; }
  int attempts() const noexcept { return attempts_; }

 private:
  bool transient_;
  int attempts_;
};

// Implementations must be safe for concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderDescriptor descriptor() const = 0;
  virtual EmbeddingVector embed_sentence(std::string_view text) = 0;
  virtual std::vector<TokenEmbedding> embed_tokens(std::string_view text) = 0;

  // Defaults to one embed_sentence call per text.
  virtual std::vector<EmbeddingVector> embed_sentences(std::span<const std::string> texts);
};

// Vectors drawn from a generator seeded by a hash of (seed, text). Tokens
// come from `tokenize` and each token vector equals embed_sentence(token),
// so equal tokens always match exactly.
class DeterministicProvider final : public EmbeddingProvider {
 public:
  explicit DeterministicProvider(std::uint64_t seed = 0, std::size_t dim = 16);

  ProviderDescriptor descriptor() const override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

// One line of the file_store JSONL format.
struct StoreEntry {
  std::string text;
  Granularity granularity = Granularity::sentence;
  std::vector<std::string> tokens;  // token granularity only
  std::vector<std::vector<double>> vectors;
};

// Precomputed embeddings. Lookups are exact on text; a miss is a permanent
// EmbeddingError. Stored vectors are renormalized on read.
class FileStoreProvider final : public EmbeddingProvider {
 public:
  static FileStoreProvider load(const std::filesystem::path& path, std::string model_name = {});
  static FileStoreProvider from_entries(std::vector<StoreEntry> entries, std::string model_name = {});

  ProviderDescriptor descriptor() const override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;

  std::size_t size() const { return sentences_.size() + tokens_.size(); }

 private:
  FileStoreProvider() = default;
  void add(StoreEntry entry, std::size_t line);

  std::string model_name_;
  std::size_t dim_ = 0;
  std::map<std::string, EmbeddingVector, std::less<>> sentences_;
  std::map<std::string, std::vector<TokenEmbedding>, std::less<>> tokens_;
};

StoreEntry parse_store_line(std::string_view line, std::size_t line_no = 0);
std::string format_store_line(const StoreEntry& entry);

struct RemoteOptions {
  std::chrono::milliseconds timeout{10000};
  int retries = 2;  // extra attempts after the first
  std::chrono::milliseconds backoff{200};
  std::size_t max_in_flight = 8;
  std::string token;  // sent as a bearer token when non-empty
};

// Client for POST /embed. The server's model name and dim are learned from
// the first reply.
class RemoteProvider final : public EmbeddingProvider {
 public:
  // `base_url` like "http://host:port" optionally followed by a path prefix.
  explicit RemoteProvider(std::string base_url, RemoteOptions options = {});
  ~RemoteProvider() override;

  ProviderDescriptor descriptor() const override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;
  std::vector<EmbeddingVector> embed_sentences(std::span<const std::string> texts) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Memoizes another provider on exact text. The memo can be written out in
// the file_store format to freeze remote results.
class CachedProvider final : public EmbeddingProvider {
 public:
  explicit CachedProvider(std::shared_ptr<EmbeddingProvider> inner);

  ProviderDescriptor descriptor() const override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;

  void save(const std::filesystem::path& path) const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector, std::less<>> sentences_;
  std::map<std::string, std::vector<TokenEmbedding>, std::less<>> tokens_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Parses "file:PATH", "http:URL" (or a bare http:// URL) and "test:SEED" /
// "test:SEED:DIM". Remote providers read METAPHOR_EVAL_PROVIDER_TOKEN.
std::shared_ptr<EmbeddingProvider> make_provider(std::string_view spec,
                                                 const RemoteOptions& remote = {});

}  // namespace metaphor_eval
