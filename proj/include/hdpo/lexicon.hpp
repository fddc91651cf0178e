#pragma once

// Whitespace tokenizer over a fixed word list.

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hdpo/policy.hpp"

namespace hdpo {

class Lexicon {
 public:
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kUnk = "<unk>";

  // `words` must start with <bos>, <eos>; <unk> is optional anywhere.
  explicit Lexicon(std::vector<std::string> words);

  // Built-in word list used by the synthetic world generator.
  static const Lexicon& standard();
  // One word per line; blank lines ignored.
  static Lexicon from_file(const std::string& path);
  void write_file(const std::string& path) const;

  Vocab vocab() const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::optional<TokenId> find(std::string_view word) const;
  // Throws InvalidInput for unknown words.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  std::optional<TokenId> unk_id() const noexcept { return unk_; }

  // Unknown words map to <unk> when present, otherwise throw InvalidInput.
  TokenSeq tokenize_prompt(std::string_view text) const;
  // Appends <eos>.
  TokenSeq tokenize_response(std::string_view text) const;
  std::string detokenize(const TokenSeq& seq) const;

 private:
  std::vector<TokenId> encode(std::string_view text) const;

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
  std::optional<TokenId> unk_;
};

std::vector<std::string> split_words(std::string_view text);

}  // namespace hdpo
