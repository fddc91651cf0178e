#include "hdpo/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "hdpo/error.hpp"

namespace hdpo {

namespace {

// Grouped by role in the synthetic world. Order is part of the corpus format:
// token ids in generated videos index into this list.
const std::vector<std::string>& standard_words() {
  static const std::vector<std::string> words = {
      "<bos>", "<eos>", "<unk>",
      // object classes
      "person", "dog", "cat", "ball", "car", "cup", "bird", "horse", "box", "chair",
      // actions
      "run", "walk", "jump", "hop", "sit", "stand", "throw", "catch", "swim", "dive",
      // colours
      "red", "blue", "green", "yellow",
      // counts
      "one", "two", "three",
      // locations (bbox column)
      "left", "center", "right",
      // static relations
      "on", "under", "near",
      // dynamic attributes
      "fast", "slow",
      // scene text
      "stop", "exit",
      // temporal connectives
      "then", "before", "after",
      // question words
      "what", "where", "how", "many", "color", "is", "the", "does", "do", "which", "happens",
      "first", "text", "shows", "object", "moving",
  };
  return words;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Lexicon::Lexicon(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.size() < 2 || words_[0] != kBos || words_[1] != kEos) {
    throw ConfigError("lexicon must start with <bos> <eos>");
  }
  if (words_.size() > 256) throw ConfigError("lexicon larger than 256 words");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("duplicate lexicon word '" + words_[i] + "'");
    }
  }
  if (auto it = index_.find(std::string(kUnk)); it != index_.end()) unk_ = it->second;
}

const Lexicon& Lexicon::standard() {
  static const Lexicon lex(standard_words());
  return lex;
}

Lexicon Lexicon::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open vocabulary file '" + path + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split_words(line);
    if (parts.empty()) continue;
    if (parts.size() != 1) throw InvalidInput("vocabulary line holds more than one word: " + line);
    words.push_back(parts.front());
  }
  return Lexicon(std::move(words));
}

void Lexicon::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  for (const auto& w : words_) out << w << '\n';
}

Vocab Lexicon::vocab() const { return Vocab{words_.size(), 0, 1}; }

std::optional<TokenId> Lexicon::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Lexicon::id(std::string_view word) const {
  if (auto t = find(word)) return *t;
  throw InvalidInput("word '" + std::string(word) + "' is not in the vocabulary");
}

const std::string& Lexicon::word(TokenId id) const {
  if (id >= words_.size()) throw InvalidInput("token id outside lexicon");
  return words_[id];
}

std::vector<TokenId> Lexicon::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) {
    if (auto t = find(w)) {
      ids.push_back(*t);
    } else if (unk_) {
      ids.push_back(*unk_);
    } else {
      throw InvalidInput("word '" + w + "' is not in the vocabulary and no <unk> is configured");
    }
  }
  return ids;
}

TokenSeq Lexicon::tokenize_prompt(std::string_view text) const {
  return TokenSeq::prompt(encode(text));
}

TokenSeq Lexicon::tokenize_response(std::string_view text) const {
  auto ids = encode(text);
  ids.push_back(1);
  return TokenSeq::response(std::move(ids));
}

std::string Lexicon::detokenize(const TokenSeq& seq) const {
  std::string out;
  for (TokenId t : seq.tokens) {
    if (seq.role == SeqRole::response && t == 1) break;
    if (!out.empty()) out += ' ';
    out += word(t);
  }
  return out;
}

}  // namespace hdpo
