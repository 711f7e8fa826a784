#include "irf/text.hpp"

#include <stdexcept>

namespace irf {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

}  // namespace

TokenizerConfig TokenizerConfig::retrieval_default() {
    return TokenizerConfig{default_stopwords(), Stemming::s_stemmer};
}

TokenizerConfig TokenizerConfig::embedding_default() {
    return TokenizerConfig{default_stopwords(), Stemming::none};
}

Stemming parse_stemming(std::string_view name) {
    if (name == "none") {
        return Stemming::none;
    }
    if (name == "s" || name == "s-stemmer" || name == "s_stemmer") {
        return Stemming::s_stemmer;
    }
    if (name == "porter" || name == "porter-style") {
        return Stemming::porter;
    }
    throw std::invalid_argument("unknown stemming mode: " + std::string(name));
}

std::string_view to_string(Stemming s) {
    switch (s) {
        case Stemming::none: return "none";
        case Stemming::s_stemmer: return "s-stemmer";
        case Stemming::porter: return "porter";
    }
    return "none";
}

std::string s_stem(std::string_view word) {
    std::string w(word);
    if (w.size() <= 3) {
        return w;
    }
    if (ends_with(w, "ies") && !ends_with(w, "eies") && !ends_with(w, "aies")) {
        w.replace(w.size() - 3, 3, "y");
    } else if (ends_with(w, "es") && !ends_with(w, "aes") && !ends_with(w, "ees") && !ends_with(w, "oes")) {
        w.pop_back();
    } else if (ends_with(w, "s") && !ends_with(w, "us") && !ends_with(w, "ss")) {
        w.pop_back();
    }
    return w;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (start == i) {
            continue;
        }
        std::string tok;
        tok.reserve(i - start);
        for (std::size_t k = start; k < i; ++k) {
            tok.push_back(lower(text[k]));
        }
        if (config.stopwords.contains(tok)) {
            continue;
        }
        switch (config.stemming) {
            case Stemming::none: break;
            case Stemming::s_stemmer: tok = s_stem(tok); break;
            case Stemming::porter: tok = porter_stem(tok); break;
        }
        if (!tok.empty()) {
            out.push_back(std::move(tok));
        }
    }
    return out;
}

}  // namespace irf
