#include "driftbench/corpus/token_stream.h"

#include <nlohmann/json.hpp>

#include <cstring>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"

namespace driftbench::corpus {

using nlohmann::json;

std::span<const uint32_t> TokenStream::split_span(const IndexRange& r) const {
  require(r.begin >= 0 && r.end <= static_cast<int64_t>(tokens.size()) && r.begin <= r.end,
          Errc::Precondition, "split range out of bounds");
  return {tokens.data() + r.begin, static_cast<size_t>(r.size())};
}

std::span<const uint32_t> TokenStream::train_span() const {
  require(splits.has_value(), Errc::Precondition, "splits not carved");
  return split_span(splits->train);
}

std::span<const uint32_t> TokenStream::val_span() const {
  require(splits.has_value(), Errc::Precondition, "splits not carved");
  return split_span(splits->val);
}

std::span<const uint32_t> TokenStream::test_span() const {
  require(splits.has_value(), Errc::Precondition, "splits not carved");
  return split_span(splits->test);
}

std::optional<std::vector<uint32_t>> ByteTokenizer::encode(std::string_view text) const {
  std::vector<uint32_t> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

std::string ByteTokenizer::decode(std::span<const uint32_t> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (uint32_t id : ids) {
    if (id < 256) out.push_back(static_cast<char>(id));
  }
  return out;
}

bool tokenize_and_append(std::string_view doc, const Tokenizer& tok, TokenStream& stream) {
  auto ids = tok.encode(doc);
  if (!ids.has_value()) {
    ++stream.skips.decode_error;
    return false;
  }
  if (ids->size() < 10) {
    ++stream.skips.too_few_tokens;
    return false;
  }
  stream.tokens.insert(stream.tokens.end(), ids->begin(), ids->end());
  stream.tokens.push_back(tok.eos_id());
  ++stream.doc_count;
  return true;
}

void carve_splits(TokenStream& stream, int64_t test_tokens, int64_t val_tokens) {
  const int64_t len = static_cast<int64_t>(stream.tokens.size());
  require(test_tokens >= 0 && val_tokens >= 0, Errc::Precondition, "negative split size");
  require(len > test_tokens + val_tokens, Errc::InsufficientCorpus,
          "stream of " + std::to_string(len) + " tokens cannot cover test+val");
  SplitBounds b;
  b.test = {len - test_tokens, len};
  b.val = {len - test_tokens - val_tokens, len - test_tokens};
  b.train = {0, len - test_tokens - val_tokens};
  stream.splits = b;
}

namespace {

json range_to_json(const IndexRange& r) { return json{{"begin", r.begin}, {"end", r.end}}; }

IndexRange range_from_json(const json& j) {
  return IndexRange{j.at("begin").get<int64_t>(), j.at("end").get<int64_t>()};
}

}  // namespace

void save_token_stream(const TokenStream& stream, const std::filesystem::path& path) {
  // Raw little-endian u32 ids; this code assumes a little-endian host.
  write_bytes_atomic(path, stream.tokens.data(), stream.tokens.size() * sizeof(uint32_t));

  json manifest{
      {"domain", stream.domain},
      {"tokenizer_id", stream.tokenizer_id},
      {"eos_id", stream.eos_id},
      {"doc_count", stream.doc_count},
      {"token_count", static_cast<int64_t>(stream.tokens.size())},
      {"source_id", stream.source_id},
      {"skip_ledger",
       {{"too_short_chars", stream.skips.too_short_chars},
        {"too_long_chars", stream.skips.too_long_chars},
        {"too_few_tokens", stream.skips.too_few_tokens},
        {"decode_error", stream.skips.decode_error}}},
  };
  if (stream.splits) {
    manifest["splits"] = {{"train", range_to_json(stream.splits->train)},
                          {"val", range_to_json(stream.splits->val)},
                          {"test", range_to_json(stream.splits->test)}};
  }
  std::filesystem::path mpath = path;
  mpath += ".json";
  write_text_file_atomic(mpath, manifest.dump(2) + "\n");
}

TokenStream load_token_stream(const std::filesystem::path& path) {
  std::filesystem::path mpath = path;
  mpath += ".json";
  json manifest = json::parse(read_text_file(mpath));

  TokenStream stream;
  stream.domain = manifest.at("domain").get<std::string>();
  stream.tokenizer_id = manifest.at("tokenizer_id").get<std::string>();
  stream.eos_id = manifest.at("eos_id").get<uint32_t>();
  stream.doc_count = manifest.at("doc_count").get<int64_t>();
  stream.source_id = manifest.value("source_id", "");
  const auto& skips = manifest.at("skip_ledger");
  stream.skips.too_short_chars = skips.at("too_short_chars").get<int64_t>();
  stream.skips.too_long_chars = skips.at("too_long_chars").get<int64_t>();
  stream.skips.too_few_tokens = skips.at("too_few_tokens").get<int64_t>();
  stream.skips.decode_error = skips.at("decode_error").get<int64_t>();

  auto bytes = read_bytes(path);
  require(bytes.size() % sizeof(uint32_t) == 0, Errc::Io, "token file size not a u32 multiple");
  stream.tokens.resize(bytes.size() / sizeof(uint32_t));
  std::memcpy(stream.tokens.data(), bytes.data(), bytes.size());
  require(static_cast<int64_t>(stream.tokens.size()) ==
              manifest.at("token_count").get<int64_t>(),
          Errc::Io, "token file length disagrees with manifest");

  if (manifest.contains("splits")) {
    SplitBounds b;
    b.train = range_from_json(manifest["splits"]["train"]);
    b.val = range_from_json(manifest["splits"]["val"]);
    b.test = range_from_json(manifest["splits"]["test"]);
    stream.splits = b;
  }
  return stream;
}

}  // namespace driftbench::corpus
