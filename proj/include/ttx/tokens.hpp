#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttx {

// Words are maximal runs of non-whitespace characters.
std::uint64_t count_words(std::string_view text) noexcept;

// One token is taken as three quarters of a word: ceil(words * 4 / 3).
std::uint64_t estimate_tokens(std::string_view text) noexcept;
std::uint64_t tokens_for_words(std::uint64_t words) noexcept;

struct ContextMessage {
  std::string role;  // chat role tag: "system", "user" or "assistant"
  std::string text;
  bool pinned = false;  // scenario preamble and human responses

  friend bool operator==(const ContextMessage&, const ContextMessage&) = default;
};

// Drops the oldest unpinned messages until the summed estimate fits within
// `token_limit`, preserving order. Throws budget_error when the pinned
// messages alone exceed the limit and validation_error for a zero limit.
std::vector<ContextMessage> fit_context(std::span<const ContextMessage> messages,
                                        std::uint64_t token_limit);

std::uint64_t total_tokens(std::span<const ContextMessage> messages) noexcept;

}  // namespace ttx
