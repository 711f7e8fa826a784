#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace irf {

enum class Stemming { none, s_stemmer, porter };

/// Tokenizer settings. Output is always lowercased.
struct TokenizerConfig {
    std::set<std::string, std::less<>> stopwords;
    Stemming stemming = Stemming::s_stemmer;

    /// Bundled stopword list with the s-stemmer; used for retrieval text.
    static TokenizerConfig retrieval_default();
    /// Bundled stopword list, no stemming; used for embedding corpora.
    static TokenizerConfig embedding_default();
};

/// The bundled English stopword list (about 400 words).
const std::set<std::string, std::less<>>& default_stopwords();

Stemming parse_stemming(std::string_view name);
std::string_view to_string(Stemming s);

/// Harman's S stemmer: "ies" -> "y", "es" -> "e", "s" -> "" with the usual guards.
std::string s_stem(std::string_view word);

/// Porter (1980) suffix-stripping stemmer.
std::string porter_stem(std::string_view word);

/// Lowercase word extraction. ASCII letters and digits plus any non-ASCII
/// byte form words; everything else delimits. Stopwords are removed before
/// stemming.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

}  // namespace irf
