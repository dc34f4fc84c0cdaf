#include <doctest.h>

#include "oracles.hpp"
#include "ttx/error.hpp"
#include "ttx/tokens.hpp"

using namespace ttx;

namespace {

std::string words_text(std::size_t n) {
  std::string s;
  s.reserve(n * 5);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "word";
  }
  return s;
}

}  // namespace

TEST_CASE("reference word counts") {
  CHECK(tokens_for_words(75) == 100);
  CHECK(tokens_for_words(1'500'000) == 2'000'000);
  CHECK(estimate_tokens(words_text(75)) == 100);
  CHECK(estimate_tokens(words_text(1'500'000)) == 2'000'000);
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens(" \t\n ") == 0);
  CHECK(estimate_tokens("one") == 2);
}

TEST_CASE("word counting matches stream extraction") {
  oracle::Gen g(21);
  for (int i = 0; i < 2000; ++i) {
    std::string text = g.sentence(40);
    if (g.coin()) text = "  " + text + "\n\n";
    CHECK(count_words(text) == oracle::words(text));
    CHECK(estimate_tokens(text) == oracle::tokens_for_words(oracle::words(text)));
  }
}

TEST_CASE("token rule properties") {
  for (std::uint64_t w = 0; w < 5000; ++w) {
    const auto t = tokens_for_words(w);
    CHECK(t == oracle::tokens_for_words(w));
    // Smallest integer not below 4w/3.
    CHECK(3 * t >= 4 * w);
    if (t > 0) CHECK(3 * (t - 1) < 4 * w);
    CHECK(tokens_for_words(w + 1) >= t);
  }
  // Concatenation never estimates fewer tokens than the larger part.
  oracle::Gen g(22);
  for (int i = 0; i < 500; ++i) {
    const auto a = g.sentence();
    const auto b = g.sentence();
    const auto joined = estimate_tokens(a + " " + b);
    CHECK(joined >= estimate_tokens(a));
    CHECK(joined <= estimate_tokens(a) + estimate_tokens(b));
  }
}

TEST_CASE("fit_context keeps pinned messages and drops oldest unpinned first") {
  std::vector<ContextMessage> msgs = {
      {"user", words_text(30), true},        // 40 tokens
      {"assistant", words_text(15), false},  // 20
      {"assistant", words_text(15), false},  // 20
      {"user", words_text(6), true},         // 8
      {"assistant", words_text(15), false},  // 20
  };
  CHECK(total_tokens(msgs) == 108);
  CHECK(fit_context(msgs, 1000) == msgs);

  const auto fitted = fit_context(msgs, 90);
  REQUIRE(fitted.size() == 4);
  CHECK(fitted[0] == msgs[0]);
  CHECK(fitted[1] == msgs[2]);
  CHECK(fitted[2] == msgs[3]);
  CHECK(fitted[3] == msgs[4]);

  const auto tight = fit_context(msgs, 48);
  REQUIRE(tight.size() == 2);
  CHECK(tight[0].pinned);
  CHECK(tight[1].pinned);

  try {
    fit_context(msgs, 47);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::budget_error);
  }
  CHECK_THROWS_AS(fit_context(msgs, 0), Error);
}

TEST_CASE("fit_context properties on random histories") {
  oracle::Gen g(23);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<ContextMessage> msgs;
    const int n = g.integer(1, 12);
    for (int i = 0; i < n; ++i) msgs.push_back({i % 2 ? "assistant" : "user", g.sentence(30), g.integer(0, 3) == 0});
    std::uint64_t pinned = 0;
    for (const auto& m : msgs) pinned += m.pinned ? estimate_tokens(m.text) : 0;
    const std::uint64_t limit = static_cast<std::uint64_t>(g.integer(1, 300));
    if (pinned > limit) {
      CHECK_THROWS_AS(fit_context(msgs, limit), Error);
      continue;
    }
    const auto kept = fit_context(msgs, limit);
    CHECK(total_tokens(kept) <= limit);
    // Order preserved, every pinned message kept, and the dropped unpinned
    // messages are a prefix of the unpinned ones.
    std::size_t j = 0;
    std::size_t dropped_unpinned = 0;
    bool kept_unpinned_seen = false;
    for (const auto& m : msgs) {
      if (j < kept.size() && kept[j] == m) {
        if (!m.pinned) kept_unpinned_seen = true;
        ++j;
      } else {
        CHECK_FALSE(m.pinned);
        CHECK_FALSE(kept_unpinned_seen);
        ++dropped_unpinned;
      }
    }
    CHECK(j == kept.size());
    // Minimal dropping: restoring the newest dropped message would overflow.
    if (dropped_unpinned > 0) {
      std::size_t seen = 0;
      for (const auto& m : msgs) {
        if (!m.pinned && ++seen == dropped_unpinned) {
          CHECK(total_tokens(kept) + estimate_tokens(m.text) > limit);
        }
      }
    }
  }
}
