#include "ttx/persistence.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ttx/error.hpp"
#include "ttx/tokens.hpp"

namespace ttx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void io_failure(const std::string& what, const fs::path& path) {
  fail(ErrorCode::integrity_error, what + " " + path.string() + ": " + std::strerror(errno));
}

class Fd {
 public:
  Fd(const fs::path& path, int flags, mode_t mode = 0644) : fd_(::open(path.c_str(), flags, mode)) {
    if (fd_ < 0) io_failure("cannot open", path);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

// Exclusive advisory lock held for the lifetime of the object.
class ExclusiveLock {
 public:
  explicit ExclusiveLock(const Fd& fd) : fd_(fd.get()) {
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) fail(ErrorCode::integrity_error, "flock failed");
    }
  }
  ExclusiveLock(const ExclusiveLock&) = delete;
  ExclusiveLock& operator=(const ExclusiveLock&) = delete;
  ~ExclusiveLock() { ::flock(fd_, LOCK_UN); }

 private:
  int fd_;
};

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write failed for", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_fd(int fd, const fs::path& path) {
  if (::fsync(fd) != 0) io_failure("fsync failed for", path);
}

void sync_dir(const fs::path& dir) {
  Fd fd(dir, O_RDONLY | O_DIRECTORY);
  ::fsync(fd.get());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_document(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::integrity_error, path.string() + " is not valid JSON: " + e.what());
  }
  if (doc.value("format_version", 0) != kFormatVersion) {
    fail(ErrorCode::integrity_error, path.string() + " has an unsupported format_version");
  }
  return doc;
}

bool safe_component(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::ranges::all_of(id, [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

void require_safe(std::string_view id, std::string_view what) {
  if (!safe_component(id)) {
    fail(ErrorCode::validation_error, std::string(what) + " '" + std::string(id) +
                                          "' may only use letters, digits, '-', '_' and '.'");
  }
}

// Returns the offset just past the last newline, dropping a torn final line
// that was never acknowledged.
off_t complete_length(int fd, const fs::path& path, std::string& last_line) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) io_failure("stat failed for", path);
  const off_t size = st.st_size;
  last_line.clear();
  if (size == 0) return 0;
  std::size_t window = 4096;
  while (true) {
    const off_t start = size > static_cast<off_t>(window) ? size - static_cast<off_t>(window) : 0;
    std::string buf(static_cast<std::size_t>(size - start), '\0');
    if (::pread(fd, buf.data(), buf.size(), start) != static_cast<ssize_t>(buf.size())) {
      io_failure("read failed for", path);
    }
    const auto last_nl = buf.rfind('\n');
    if (last_nl == std::string::npos) {
      if (start == 0) return 0;  // only a torn line
      window *= 4;
      continue;
    }
    const auto prev_nl = last_nl == 0 ? std::string::npos : buf.rfind('\n', last_nl - 1);
    if (prev_nl == std::string::npos && start != 0) {
      window *= 4;
      continue;
    }
    const std::size_t line_start = prev_nl == std::string::npos ? 0 : prev_nl + 1;
    last_line = buf.substr(line_start, last_nl - line_start);
    return start + static_cast<off_t>(last_nl) + 1;
  }
}

std::string item_line(const StoredActionItem& s) {
  std::string line = "- [" + std::string(to_string(s.item.status)) + "] " + s.item.item_id + ": " +
                     s.item.finding + " Improvement: " + s.item.improvement;
  if (!s.item.measurable_criterion.empty()) line += " Measure: " + s.item.measurable_criterion;
  return line;
}

json item_document(const StoredActionItem& s) {
  json doc = s.item;
  doc["format_version"] = kFormatVersion;
  doc["created_order"] = s.created_order;
  doc["revision"] = s.revision;
  doc["audit"] = s.audit;
  return doc;
}

StoredActionItem item_from_document(const json& doc) {
  StoredActionItem s;
  s.item = doc.get<ActionItem>();
  s.created_order = doc.value("created_order", std::uint64_t{0});
  s.revision = doc.value("revision", std::uint64_t{0});
  s.audit = doc.value("audit", std::vector<std::string>{});
  return s;
}

}  // namespace

void write_document(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    write_all(fd.get(), content, tmp);
    sync_fd(fd.get(), tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) io_failure("rename failed for", path);
  sync_dir(path.parent_path());
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (const char* sub : {"sessions", "registry/action_items", "domains"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) {
      fail(ErrorCode::validation_error,
           "storage root " + root_.string() + " is not writable: " + ec.message());
    }
  }
  if (::access(root_.c_str(), W_OK) != 0) {
    fail(ErrorCode::validation_error, "storage root " + root_.string() + " is not writable");
  }
}

fs::path FileStore::session_dir(std::string_view id) const {
  require_safe(id, "session id");
  return root_ / "sessions" / std::string(id);
}

fs::path FileStore::item_path(std::string_view id) const {
  require_safe(id, "item id");
  return root_ / "registry" / "action_items" / (std::string(id) + ".json");
}

bool FileStore::has_session(std::string_view session_id) const {
  return safe_component(session_id) && fs::exists(session_dir(session_id) / "header");
}

std::vector<std::string> FileStore::list_sessions() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (fs::exists(entry.path() / "header")) out.push_back(entry.path().filename().string());
  }
  std::ranges::sort(out);
  return out;
}

std::string FileStore::next_session_id(std::string_view prefix) const {
  for (int i = 1;; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%04d", i);
    std::string id = std::string(prefix) + buf;
    if (!fs::exists(session_dir(id))) return id;
  }
}

std::string FileStore::save_session(const ExerciseSession& session) {
  const auto dir = session_dir(session.id());
  const auto header = dir / "header";
  if (!fs::exists(header)) {
    fs::create_directories(dir);
    const auto& created = session.transcript().front().body;
    json doc = {
        {"format_version", kFormatVersion},
        {"session_id", session.id()},
        {"created_at", created.at("started_at")},
        {"scenario", session.scenario()},
        {"participants", created.at("participants")},
        {"time_budget_ms", session.time_budget().count()},
        {"events", "events.log"},
    };
    write_document(header, doc.dump(2) + "\n");
    sync_dir(dir.parent_path());
  }
  const auto stored = read_events(session.id());
  const auto& transcript = session.transcript();
  if (stored.size() > transcript.size() ||
      !std::equal(stored.begin(), stored.end(), transcript.begin())) {
    fail(ErrorCode::conflict, "stored log for " + session.id() +
                                  " has diverged from the session being saved");
  }
  for (std::size_t i = stored.size(); i < transcript.size(); ++i) {
    append_event(session.id(), transcript[i]);
  }
  return session.id();
}

std::uint64_t FileStore::append_event(std::string_view session_id, const SessionEvent& event) {
  const auto dir = session_dir(session_id);
  if (!fs::exists(dir / "header")) {
    fail(ErrorCode::not_found, "no stored session " + std::string(session_id));
  }
  const auto log = dir / "events.log";
  Fd fd(log, O_RDWR | O_CREAT | O_APPEND);
  ExclusiveLock lock(fd);

  std::string last_line;
  const off_t good = complete_length(fd.get(), log, last_line);
  struct stat st {};
  ::fstat(fd.get(), &st);
  if (st.st_size != good && ::ftruncate(fd.get(), good) != 0) {
    io_failure("cannot drop torn tail of", log);
  }
  std::uint64_t last = 0;
  if (!last_line.empty()) {
    try {
      last = json::parse(last_line).at("seq").get<std::uint64_t>();
    } catch (const json::exception& e) {
      fail(ErrorCode::integrity_error, log.string() + " has a corrupt tail: " + e.what());
    }
  }
  if (event.sequence_number != last + 1) {
    fail(ErrorCode::conflict, "sequence conflict on " + std::string(session_id) + ": log tail is " +
                                  std::to_string(last) + ", event carries " +
                                  std::to_string(event.sequence_number));
  }
  const std::string line = json(event).dump() + "\n";
  write_all(fd.get(), line, log);
  sync_fd(fd.get(), log);
  if (last == 0) sync_dir(dir);
  return event.sequence_number;
}

std::uint64_t FileStore::last_sequence(std::string_view session_id) const {
  const auto log = session_dir(session_id) / "events.log";
  if (!fs::exists(log)) return 0;
  Fd fd(log, O_RDONLY);
  std::string last_line;
  complete_length(fd.get(), log, last_line);
  if (last_line.empty()) return 0;
  try {
    return json::parse(last_line).at("seq").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::integrity_error, log.string() + " has a corrupt tail: " + e.what());
  }
}

std::vector<SessionEvent> FileStore::read_events(std::string_view session_id) const {
  const auto dir = session_dir(session_id);
  if (!fs::exists(dir / "header")) {
    fail(ErrorCode::not_found, "no stored session " + std::string(session_id));
  }
  const auto log = dir / "events.log";
  std::vector<SessionEvent> out;
  if (!fs::exists(log)) return out;
  const std::string data = read_file(log);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (true) {
    const auto nl = data.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail is not part of the log
    ++line_no;
    const std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    try {
      out.push_back(json::parse(line).get<SessionEvent>());
    } catch (const std::exception& e) {
      const std::uint64_t expected = out.empty() ? 1 : out.back().sequence_number + 1;
      fail(ErrorCode::integrity_error, "event log line " + std::to_string(line_no) +
                                           " (expected sequence " + std::to_string(expected) +
                                           ") is corrupt: " + e.what());
    }
  }
  return out;
}

ExerciseSession FileStore::load_session(std::string_view session_id) const {
  const auto header_path = session_dir(session_id) / "header";
  if (!fs::exists(header_path)) {
    fail(ErrorCode::not_found, "no stored session " + std::string(session_id));
  }
  const json header = read_document(header_path);
  const auto events = read_events(session_id);
  ExerciseSession session = ExerciseSession::replay(events);
  if (header.at("session_id") != session.id() || session.id() != session_id) {
    fail(ErrorCode::integrity_error, "header and event log disagree on the session id");
  }
  if (header.at("scenario").get<Scenario>() != session.scenario() ||
      header.at("time_budget_ms").get<long long>() != session.time_budget().count()) {
    fail(ErrorCode::integrity_error, "header and creation event disagree for " + session.id());
  }
  return session;
}

// ---------------------------------------------------------------------------
// Domains

void FileStore::save_domain(const ResponsibilityDomain& domain) {
  if (domain.name.empty()) fail(ErrorCode::validation_error, "domain name must not be empty");
  require_safe(domain.domain_id, "domain id");
  for (const auto& other : list_domains()) {
    if (other.name == domain.name && other.domain_id != domain.domain_id) {
      fail(ErrorCode::conflict, "domain name '" + domain.name + "' already belongs to " +
                                    other.domain_id);
    }
  }
  json doc = domain;
  doc["format_version"] = kFormatVersion;
  write_document(root_ / "domains" / (domain.domain_id + ".json"), doc.dump(2) + "\n");
}

std::vector<ResponsibilityDomain> FileStore::list_domains() const {
  std::vector<ResponsibilityDomain> out;
  for (const auto& entry : fs::directory_iterator(root_ / "domains")) {
    if (entry.path().extension() != ".json") continue;
    out.push_back(read_document(entry.path()).get<ResponsibilityDomain>());
  }
  std::ranges::sort(out, {}, &ResponsibilityDomain::domain_id);
  return out;
}

std::optional<ResponsibilityDomain> FileStore::find_domain(std::string_view id_or_name) const {
  if (safe_component(id_or_name)) {
    const auto path = root_ / "domains" / (std::string(id_or_name) + ".json");
    if (fs::exists(path)) return read_document(path).get<ResponsibilityDomain>();
  }
  for (auto& d : list_domains()) {
    if (d.name == id_or_name) return d;
  }
  return std::nullopt;
}

std::string FileStore::resolve_domain_id(std::string_view id_or_name) const {
  auto d = find_domain(id_or_name);
  if (!d) {
    fail(ErrorCode::validation_error, "unknown responsibility domain '" +
                                          std::string(id_or_name) + "'");
  }
  return d->domain_id;
}

// ---------------------------------------------------------------------------
// Action-item registry

std::uint64_t FileStore::bump_counter(std::string_view name, std::uint64_t by) {
  const auto path = root_ / "registry" / "counters.json";
  json doc = fs::exists(path) ? read_document(path) : json{{"format_version", kFormatVersion}};
  const std::uint64_t value = doc.value(std::string(name), std::uint64_t{0}) + by;
  doc[std::string(name)] = value;
  write_document(path, doc.dump(2) + "\n");
  return value;
}

void FileStore::write_item(const StoredActionItem& stored) {
  write_document(item_path(stored.item.item_id), item_document(stored).dump(2) + "\n");
}

std::vector<std::string> FileStore::store_action_items(std::vector<ActionItem> items,
                                                       std::string_view source_session) {
  for (auto& item : items) {
    auto blank = [](const std::string& s) {
      return s.find_first_not_of(" \t\r\n") == std::string::npos;
    };
    if (blank(item.finding) || blank(item.improvement)) {
      fail(ErrorCode::validation_error, "action item needs both a finding and an improvement");
    }
    if (item.responsibility_domain) {
      item.responsibility_domain = resolve_domain_id(*item.responsibility_domain);
    }
  }
  Fd lock_fd(root_ / "registry" / ".lock", O_RDWR | O_CREAT);
  ExclusiveLock lock(lock_fd);
  std::vector<std::string> ids;
  for (auto& item : items) {
    StoredActionItem stored;
    char buf[32];
    std::snprintf(buf, sizeof buf, "AI-%06llu",
                  static_cast<unsigned long long>(bump_counter("next_item")));
    item.item_id = buf;
    item.source_session = std::string(source_session);
    stored.item = item;
    stored.created_order = bump_counter("next_order");
    stored.revision = bump_counter("revision");
    write_item(stored);
    ids.push_back(item.item_id);
  }
  return ids;
}

std::vector<StoredActionItem> FileStore::all_items(std::optional<std::string_view> domain) const {
  std::optional<std::string> domain_id;
  if (domain) domain_id = resolve_domain_id(*domain);
  std::vector<StoredActionItem> out;
  for (const auto& entry : fs::directory_iterator(root_ / "registry" / "action_items")) {
    if (entry.path().extension() != ".json") continue;
    auto stored = item_from_document(read_document(entry.path()));
    if (domain_id && stored.item.responsibility_domain != domain_id) continue;
    out.push_back(std::move(stored));
  }
  std::ranges::sort(out, {}, &StoredActionItem::created_order);
  return out;
}

std::vector<ActionItem> FileStore::open_items(std::optional<std::string_view> domain) const {
  std::vector<ActionItem> out;
  for (auto& s : all_items(domain)) {
    if (s.item.status != ActionStatus::done) out.push_back(std::move(s.item));
  }
  return out;
}

std::optional<StoredActionItem> FileStore::find_item(std::string_view item_id) const {
  const auto path = item_path(item_id);
  if (!fs::exists(path)) return std::nullopt;
  return item_from_document(read_document(path));
}

StoredActionItem FileStore::update_status(std::string_view item_id, ActionStatus status,
                                          std::optional<ActionStatus> expected, bool reopen) {
  Fd lock_fd(root_ / "registry" / ".lock", O_RDWR | O_CREAT);
  ExclusiveLock lock(lock_fd);
  auto stored = find_item(item_id);
  if (!stored) fail(ErrorCode::not_found, "no action item " + std::string(item_id));
  const ActionStatus current = stored->item.status;
  const ActionStatus basis = expected.value_or(current);
  if (!status_transition_allowed(basis, status, reopen)) {
    fail(ErrorCode::validation_error, "status cannot move from " + std::string(to_string(basis)) +
                                          " to " + std::string(to_string(status)) +
                                          (status == ActionStatus::open ? " without reopen" : ""));
  }
  stored->revision = bump_counter("revision");
  if (expected && *expected != current) {
    stored->audit.push_back("revision " + std::to_string(stored->revision) + ": expected " +
                            std::string(to_string(*expected)) + ", found " +
                            std::string(to_string(current)) + "; overwritten with " +
                            std::string(to_string(status)));
  }
  stored->item.status = status;
  write_item(*stored);
  return *stored;
}

std::string FileStore::context_for_future(std::string_view domain, std::uint64_t token_cap) const {
  const auto d = find_domain(domain);
  if (!d) return {};
  auto items = all_items(d->domain_id);
  std::vector<StoredActionItem> open;
  std::vector<StoredActionItem> closed;
  for (auto& s : items) {
    (s.item.status == ActionStatus::done ? closed : open).push_back(std::move(s));
  }
  std::ranges::sort(closed, std::ranges::greater{}, &StoredActionItem::revision);
  if (closed.size() > kRecentClosedItems) closed.resize(kRecentClosedItems);
  std::vector<StoredActionItem> selected = std::move(open);
  selected.insert(selected.end(), closed.begin(), closed.end());
  if (selected.empty()) return {};
  std::ranges::sort(selected, std::ranges::greater{}, &StoredActionItem::created_order);

  std::string digest = "Prior findings for " + d->name + " (newest first):";
  std::size_t included = 0;
  for (const auto& s : selected) {
    std::string next = digest + "\n" + item_line(s);
    if (estimate_tokens(next) > token_cap) break;
    digest = std::move(next);
    ++included;
  }
  return included == 0 ? std::string{} : digest + "\n";
}

}  // namespace ttx
