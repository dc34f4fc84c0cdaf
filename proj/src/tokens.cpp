#include "ttx/tokens.hpp"

#include "ttx/error.hpp"

namespace ttx {

namespace {

constexpr bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::uint64_t count_words(std::string_view text) noexcept {
  std::uint64_t words = 0;
  bool in_word = false;
  for (char ch : text) {
    const bool space = is_space(static_cast<unsigned char>(ch));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::uint64_t tokens_for_words(std::uint64_t words) noexcept {
  return (words * 4 + 2) / 3;
}

std::uint64_t estimate_tokens(std::string_view text) noexcept {
  return tokens_for_words(count_words(text));
}

std::uint64_t total_tokens(std::span<const ContextMessage> messages) noexcept {
  std::uint64_t total = 0;
  for (const auto& m : messages) total += estimate_tokens(m.text);
  return total;
}

std::vector<ContextMessage> fit_context(std::span<const ContextMessage> messages,
                                        std::uint64_t token_limit) {
  if (token_limit == 0) fail(ErrorCode::validation_error, "token_limit must be positive");
  std::uint64_t pinned = 0;
  std::uint64_t total = 0;
  for (const auto& m : messages) {
    const auto t = estimate_tokens(m.text);
    total += t;
    if (m.pinned) pinned += t;
  }
  if (pinned > token_limit) {
    fail(ErrorCode::budget_error, "pinned context needs " + std::to_string(pinned) +
                                      " tokens, limit is " + std::to_string(token_limit));
  }
  std::vector<bool> keep(messages.size(), true);
  for (std::size_t i = 0; i < messages.size() && total > token_limit; ++i) {
    if (messages[i].pinned) continue;
    keep[i] = false;
    total -= estimate_tokens(messages[i].text);
  }
  std::vector<ContextMessage> out;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (keep[i]) out.push_back(messages[i]);
  }
  return out;
}

}  // namespace ttx
