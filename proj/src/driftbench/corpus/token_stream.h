#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftbench::corpus {

struct IndexRange {
  int64_t begin = 0;
  int64_t end = 0;  // half-open

  int64_t size() const { return end - begin; }
};

struct SplitBounds {
  IndexRange train;
  IndexRange val;
  IndexRange test;
};

/// Counters for documents dropped during ingestion, persisted with the
/// manifest so a prepared corpus can be audited.
struct SkipLedger {
  int64_t too_short_chars = 0;
  int64_t too_long_chars = 0;
  int64_t too_few_tokens = 0;
  int64_t decode_error = 0;
};

/// Flat 1D token stream for one domain: documents tokenized at full length
/// and concatenated with one EOS id after each document.
struct TokenStream {
  std::string domain;
  std::string tokenizer_id;
  uint32_t eos_id = 0;
  int64_t doc_count = 0;
  std::vector<uint32_t> tokens;
  std::optional<SplitBounds> splits;
  SkipLedger skips;
  std::string source_id;

  std::span<const uint32_t> split_span(const IndexRange& r) const;
  std::span<const uint32_t> train_span() const;
  std::span<const uint32_t> val_span() const;
  std::span<const uint32_t> test_span() const;
};

/// Abstract tokenizer surface. Tokenizers are injected by the caller; this
/// module never chooses one.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string id() const = 0;
  virtual int vocab_size() const = 0;
  virtual uint32_t eos_id() const = 0;
  /// nullopt signals a corrupt document (undecodable input).
  virtual std::optional<std::vector<uint32_t>> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const uint32_t> ids) const = 0;
};

/// Byte-level tokenizer: ids 0..255 are raw bytes, 256 is EOS. The desk-scale
/// default; never fails to encode.
class ByteTokenizer : public Tokenizer {
 public:
  std::string id() const override { return "byte-v1"; }
  int vocab_size() const override { return 257; }
  uint32_t eos_id() const override { return 256; }
  std::optional<std::vector<uint32_t>> encode(std::string_view text) const override;
  std::string decode(std::span<const uint32_t> ids) const override;
};

/// Appends one filtered document to the stream: tokens plus a trailing EOS,
/// incrementing doc_count. Documents tokenizing to fewer than 10 tokens are
/// skipped (counted in the ledger), as are undecodable ones.
/// Returns true if the document was appended.
bool tokenize_and_append(std::string_view doc, const Tokenizer& tok, TokenStream& stream);

/// Carves deterministic splits: test = last test_tokens ids, val = the
/// val_tokens before them, train = everything from index 0. Throws
/// InsufficientCorpus when the stream cannot cover test+val with a non-empty
/// train remainder.
void carve_splits(TokenStream& stream, int64_t test_tokens, int64_t val_tokens);

/// Binary token file (little-endian u32, no header) plus a JSON sidecar
/// manifest. `path` names the .bin file; the manifest lands at path + ".json".
void save_token_stream(const TokenStream& stream, const std::filesystem::path& path);
TokenStream load_token_stream(const std::filesystem::path& path);

}  // namespace driftbench::corpus
