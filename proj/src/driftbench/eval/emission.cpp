#include "driftbench/eval/emission.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/core/rng.h"
#include "driftbench/core/utf8.h"

namespace driftbench::eval {

using nlohmann::json;

const char* emission_label_name(EmissionLabel label) {
  switch (label) {
    case EmissionLabel::ProseCoherent: return "PROSE_COHERENT";
    case EmissionLabel::PythonBleed: return "PYTHON_BLEED";
    case EmissionLabel::MathBleed: return "MATH_BLEED";
    case EmissionLabel::ChineseBleed: return "CHINESE_BLEED";
    case EmissionLabel::JsBleed: return "JS_BLEED";
    case EmissionLabel::CjkCoherent: return "CJK_COHERENT";
    case EmissionLabel::Repetition: return "REPETITION";
    case EmissionLabel::Gibberish: return "GIBBERISH";
  }
  return "?";
}

EmissionLabel emission_label_from_name(const std::string& name) {
  static const std::map<std::string, EmissionLabel> kMap = {
      {"PROSE_COHERENT", EmissionLabel::ProseCoherent},
      {"PYTHON_BLEED", EmissionLabel::PythonBleed},
      {"MATH_BLEED", EmissionLabel::MathBleed},
      {"CHINESE_BLEED", EmissionLabel::ChineseBleed},
      {"JS_BLEED", EmissionLabel::JsBleed},
      {"CJK_COHERENT", EmissionLabel::CjkCoherent},
      {"REPETITION", EmissionLabel::Repetition},
      {"GIBBERISH", EmissionLabel::Gibberish},
  };
  auto it = kMap.find(name);
  require(it != kMap.end(), Errc::BadConfig, "unknown emission label " + name);
  return it->second;
}

namespace {

int count_occurrences(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return 0;
  int count = 0;
  size_t pos = haystack.find(needle);
  while (pos != std::string::npos) {
    ++count;
    pos = haystack.find(needle, pos + needle.size());
  }
  return count;
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double cjk_ratio(const std::string& text) {
  const auto cps = utf8_decode(text);
  int64_t cjk = 0, total = 0;
  for (uint32_t cp : cps) {
    if (cp == ' ' || cp == '\n' || cp == '\t' || cp == '\r') continue;
    ++total;
    if (is_cjk(cp)) ++cjk;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(cjk) / static_cast<double>(total);
}

int code_signal_score(const std::string& text, int* python_hits_out, int* js_hits_out) {
  static const char* kPython[] = {"def ",    "import ", "print(", "len(",  ".format(",
                                  "return ", "self.",   "lambda ", "elif ", "__",
                                  "):",      "# "};
  static const char* kJs[] = {"function ", "function(", "const ",    "var ",     "let ",
                              "=>",        "===",       "console.", "require(", "};"};
  static const char* kLicense[] = {"all rights reserved",
                                   "warranty of any kind",
                                   "without warranty",
                                   "copyright (c)",
                                   "licensed under",
                                   "redistribution",
                                   "liability",
                                   "merchantability",
                                   "noninfringement",
                                   "fitness for a particular purpose",
                                   "\"as is\""};
  int python_hits = 0, js_hits = 0, license_hits = 0;
  for (const char* p : kPython) python_hits += count_occurrences(text, p);
  for (const char* p : kJs) js_hits += count_occurrences(text, p);
  const std::string lower = to_lower(text);
  for (const char* p : kLicense) license_hits += count_occurrences(lower, p);

  // Structural density: assignment/terminator characters per byte.
  int structural = 0;
  for (char c : text) {
    if (c == ';' || c == '{' || c == '}' || c == '=') ++structural;
  }
  int density_bonus = 0;
  if (!text.empty() &&
      static_cast<double>(structural) / static_cast<double>(text.size()) > 0.03) {
    density_bonus = 3;
  }

  if (python_hits_out) *python_hits_out = python_hits;
  if (js_hits_out) *js_hits_out = js_hits;
  return python_hits + js_hits + license_hits + density_bonus;
}

int math_signal_score(const std::string& text) {
  static const char* kLatex[] = {"\\frac", "\\sum",  "\\int",   "\\begin{", "\\end{",
                                 "\\alpha", "\\beta", "\\cdot", "\\sqrt",   "$$"};
  int hits = 0;
  for (const char* p : kLatex) hits += count_occurrences(text, p);
  if (count_occurrences(text, "$") >= 4) hits += 2;
  const auto cps = utf8_decode(text);
  for (uint32_t cp : cps) {
    if (cp == 0x222B || cp == 0x2211 || cp == 0x221A || cp == 0x2260 || cp == 0x2264 ||
        cp == 0x2265) {
      ++hits;
    }
  }
  return hits;
}

bool has_repeated_ngram(const std::string& text, int min_n, int max_n, int min_repeats) {
  std::vector<std::string> words;
  std::istringstream iss(text);
  std::string w;
  while (iss >> w) words.push_back(w);
  const int total = static_cast<int>(words.size());
  for (int n = min_n; n <= max_n; ++n) {
    if (total < n * min_repeats) break;
    std::map<std::string, int> counts;
    for (int i = 0; i + n <= total; ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        key += words[static_cast<size_t>(i + j)];
        key += '\x1f';
      }
      if (++counts[key] >= min_repeats) return true;
    }
  }
  return false;
}

double word_validity_ratio(const std::string& text) {
  std::istringstream iss(text);
  std::string tok;
  int64_t valid = 0, total = 0;
  while (iss >> tok) {
    // Strip surrounding punctuation.
    size_t b = 0, e = tok.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
    const std::string core = tok.substr(b, e - b);
    ++total;
    if (core.empty() || core.size() > 20) continue;
    bool alpha = true;
    bool vowel = false;
    for (char c : core) {
      if (!std::isalpha(static_cast<unsigned char>(c))) {
        alpha = false;
        break;
      }
      char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lc == 'a' || lc == 'e' || lc == 'i' || lc == 'o' || lc == 'u' || lc == 'y') {
        vowel = true;
      }
    }
    if (alpha && (vowel || core.size() <= 2)) ++valid;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(valid) / static_cast<double>(total);
}

EmissionLabel classify_emission(const std::string& prompt_domain, const std::string& text) {
  require(!text.empty(), Errc::Precondition, "empty emission text");

  if (cjk_ratio(text) > 0.3) {
    return prompt_domain == "Chinese" ? EmissionLabel::CjkCoherent : EmissionLabel::ChineseBleed;
  }
  int python_hits = 0, js_hits = 0;
  if (code_signal_score(text, &python_hits, &js_hits) >= 4) {
    return js_hits > python_hits ? EmissionLabel::JsBleed : EmissionLabel::PythonBleed;
  }
  if (math_signal_score(text) >= 2) return EmissionLabel::MathBleed;
  if (has_repeated_ngram(text)) return EmissionLabel::Repetition;
  if (word_validity_ratio(text) < 0.4) return EmissionLabel::Gibberish;
  return EmissionLabel::ProseCoherent;
}

PromptSet load_prompt_set(const std::filesystem::path& path) {
  json doc = json::parse(read_text_file(path));
  PromptSet set;
  set.version = doc.at("version").get<std::string>();
  for (const auto& entry : doc.at("domains")) {
    std::vector<std::string> prompts;
    for (const auto& p : entry.at("prompts")) prompts.push_back(p.get<std::string>());
    require(prompts.size() == 3, Errc::BadConfig, "each domain carries exactly 3 prompts");
    set.prompts.emplace_back(entry.at("domain").get<std::string>(), std::move(prompts));
  }
  return set;
}

std::vector<EmissionRecord> emission_probe(const model::LanguageModel& m,
                                           const corpus::Tokenizer& tok, const PromptSet& prompts,
                                           model::SamplingConfig cfg, int phase) {
  std::vector<EmissionRecord> out;
  int flat_index = 0;
  for (const auto& [domain, texts] : prompts.prompts) {
    for (size_t pi = 0; pi < texts.size(); ++pi, ++flat_index) {
      EmissionRecord rec;
      rec.prompt_domain = domain;
      rec.prompt_text = texts[pi];
      rec.phase = phase;
      rec.prompt_index = static_cast<int>(pi);
      auto prompt_ids = tok.encode(rec.prompt_text);
      require(prompt_ids.has_value(), Errc::CorruptDocument, "prompt failed to tokenize");
      model::SamplingConfig pc = cfg;
      pc.seed = derive_seed(cfg.seed, {static_cast<uint64_t>(phase),
                                       static_cast<uint64_t>(flat_index)});
      const auto ids = m.generate(*prompt_ids, pc);
      rec.output_text = tok.decode(ids);
      if (rec.output_text.empty()) rec.output_text = "\n";
      rec.label = classify_emission(domain, rec.output_text);
      rec.label_source = "auto";
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void apply_manual_overrides(std::vector<EmissionRecord>& records,
                            const std::filesystem::path& sidecar) {
  if (!std::filesystem::exists(sidecar)) return;
  json doc = json::parse(read_text_file(sidecar));
  for (const auto& ov : doc.at("overrides")) {
    const int phase = ov.at("phase").get<int>();
    const std::string domain = ov.at("domain").get<std::string>();
    const int pi = ov.at("prompt_index").get<int>();
    const EmissionLabel label = emission_label_from_name(ov.at("label").get<std::string>());
    for (auto& rec : records) {
      if (rec.phase == phase && rec.prompt_domain == domain && rec.prompt_index == pi) {
        rec.label = label;
        rec.label_source = "manual";
      }
    }
  }
}

}  // namespace driftbench::eval
