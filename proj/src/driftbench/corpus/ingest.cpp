#include "driftbench/corpus/ingest.h"

#include <algorithm>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/core/utf8.h"

namespace driftbench::corpus {

TokenStream ingest_documents(const DomainSpec& spec, const Tokenizer& tok,
                             const std::function<bool(std::string&)>& next_doc,
                             const IngestOptions& opts) {
  TokenStream stream;
  stream.domain = spec.name;
  stream.tokenizer_id = tok.id();
  stream.eos_id = tok.eos_id();
  stream.source_id = spec.source_id;

  std::string doc;
  while (next_doc(doc)) {
    if (opts.target_tokens > 0 &&
        static_cast<int64_t>(stream.tokens.size()) >= opts.target_tokens) {
      break;
    }
    if (!filter_document(doc, spec)) {
      // Attribute the rejection to the violated bound for the audit ledger.
      const int64_t chars = static_cast<int64_t>(utf8_decode(doc).size());
      if (spec.min_chars && chars < *spec.min_chars) {
        ++stream.skips.too_short_chars;
      } else {
        ++stream.skips.too_long_chars;
      }
      continue;
    }
    tokenize_and_append(doc, tok, stream);
  }

  carve_splits(stream, opts.test_tokens, opts.val_tokens);
  return stream;
}

TokenStream ingest_text_dir(const DomainSpec& spec, const Tokenizer& tok,
                            const std::filesystem::path& dir, const IngestOptions& opts) {
  require(std::filesystem::is_directory(dir), Errc::Io, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  size_t next = 0;
  auto next_doc = [&](std::string& doc) {
    if (next >= files.size()) return false;
    doc = read_text_file(files[next++]);
    return true;
  };
  return ingest_documents(spec, tok, next_doc, opts);
}

}  // namespace driftbench::corpus
