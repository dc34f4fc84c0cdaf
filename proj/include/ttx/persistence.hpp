#pragma once

// File-backed store. Layout under the root directory:
//
//   sessions/<id>/header           session document (JSON, format_version)
//   sessions/<id>/events.log       one JSON event per line, append-only
//   registry/action_items/<id>.json
//   registry/counters.json         id and revision counters
//   domains/<domain_id>.json
//
// Documents are replaced atomically (write, fsync, rename). Event appends are
// serialized by an exclusive lock on the log and fsynced before they are
// acknowledged.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/action_items.hpp"
#include "ttx/domain.hpp"
#include "ttx/exercise.hpp"

namespace ttx {

inline constexpr int kFormatVersion = 1;
inline constexpr std::uint64_t kDefaultDigestTokens = 2000;
inline constexpr std::size_t kRecentClosedItems = 5;

struct StoredActionItem {
  ActionItem item;
  std::uint64_t created_order = 0;  // registry-wide insertion order
  std::uint64_t revision = 0;       // bumped on every write
  std::vector<std::string> audit;   // conflicting status writes
};

class FileStore {
 public:
  // Creates the directory layout; throws validation_error when the root is
  // not writable.
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Writes the header when missing and appends every transcript event the log
  // does not hold yet. A stored log that is not a prefix of the session's
  // transcript is a conflict.
  std::string save_session(const ExerciseSession& session);
  ExerciseSession load_session(std::string_view session_id) const;
  bool has_session(std::string_view session_id) const;
  std::vector<std::string> list_sessions() const;

  // Requires event.sequence_number == last + 1, else conflict. Returns the
  // acknowledged sequence number once the line is on disk.
  std::uint64_t append_event(std::string_view session_id, const SessionEvent& event);
  std::vector<SessionEvent> read_events(std::string_view session_id) const;
  std::uint64_t last_sequence(std::string_view session_id) const;

  // Smallest "<prefix>-NNNN" not yet used by a stored session.
  std::string next_session_id(std::string_view prefix) const;

  void save_domain(const ResponsibilityDomain& domain);
  std::optional<ResponsibilityDomain> find_domain(std::string_view id_or_name) const;
  std::vector<ResponsibilityDomain> list_domains() const;

  // Validates items and domain references, assigns ids, stamps the source
  // session and writes one document per item. Returns the new ids in order.
  std::vector<std::string> store_action_items(std::vector<ActionItem> items,
                                              std::string_view source_session);
  // Items that are not done, optionally for one domain (id or name), oldest first.
  std::vector<ActionItem> open_items(std::optional<std::string_view> domain = std::nullopt) const;
  std::vector<StoredActionItem> all_items(std::optional<std::string_view> domain = std::nullopt) const;
  std::optional<StoredActionItem> find_item(std::string_view item_id) const;

  // Last write wins. When `expected` is given and differs from the stored
  // status the write still applies and the conflict is noted in the audit.
  StoredActionItem update_status(std::string_view item_id, ActionStatus status,
                                 std::optional<ActionStatus> expected = std::nullopt,
                                 bool reopen = false);

  // Open items plus the most recently closed ones for a domain, newest first,
  // cut at `token_cap` estimated tokens. Empty when the domain has no history.
  std::string context_for_future(std::string_view domain,
                                 std::uint64_t token_cap = kDefaultDigestTokens) const;

 private:
  std::filesystem::path session_dir(std::string_view id) const;
  std::filesystem::path item_path(std::string_view id) const;
  std::string resolve_domain_id(std::string_view id_or_name) const;
  void write_item(const StoredActionItem& stored);
  std::uint64_t bump_counter(std::string_view name, std::uint64_t by = 1);

  std::filesystem::path root_;
};

// Writes `content` to `path` atomically and durably.
void write_document(const std::filesystem::path& path, const std::string& content);

}  // namespace ttx
