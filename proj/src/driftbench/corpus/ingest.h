#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "driftbench/corpus/domain_spec.h"
#include "driftbench/corpus/token_stream.h"

namespace driftbench::corpus {

struct IngestOptions {
  int64_t test_tokens = 50000;
  int64_t val_tokens = 50000;
  /// Stop ingesting documents once the stream holds at least this many tokens
  /// (0 = ingest everything the source yields).
  int64_t target_tokens = 0;
};

/// Streaming ingest: documents are pulled from `next_doc` one at a time,
/// filtered, tokenized, and appended, so memory stays bounded by one document
/// plus the token stream itself. `next_doc` returns false when exhausted.
TokenStream ingest_documents(const DomainSpec& spec, const Tokenizer& tok,
                             const std::function<bool(std::string&)>& next_doc,
                             const IngestOptions& opts);

/// Desk-scale mode: every regular file under `dir` (sorted by path) is one
/// document.
TokenStream ingest_text_dir(const DomainSpec& spec, const Tokenizer& tok,
                            const std::filesystem::path& dir, const IngestOptions& opts);

}  // namespace driftbench::corpus
