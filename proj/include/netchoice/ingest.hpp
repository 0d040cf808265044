#pragma once

// Event-log ingestion and the two-mode -> one-mode projection of
// author->site interactions onto directed author->author interactions.

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "netchoice/common.hpp"
#include "netchoice/csv.hpp"

namespace netchoice {

enum class InteractionKind : std::uint8_t { guestbook, amp, comment };
enum class RoleLabel : std::uint8_t { P, CG, unlabeled };
enum class Format { csv, jsonl };

inline std::string_view to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::guestbook: return "guestbook";
    case InteractionKind::amp: return "amp";
    case InteractionKind::comment: return "comment";
  }
  return "?";
}

inline std::optional<InteractionKind> parse_kind(std::string_view s) {
  if (s == "guestbook") return InteractionKind::guestbook;
  if (s == "amp") return InteractionKind::amp;
  if (s == "comment") return InteractionKind::comment;
  return std::nullopt;
}

inline std::string_view to_string(RoleLabel r) {
  switch (r) {
    case RoleLabel::P: return "P";
    case RoleLabel::CG: return "CG";
    case RoleLabel::unlabeled: return "";
  }
  return "?";
}

inline std::optional<RoleLabel> parse_role_label(std::string_view s) {
  if (s == "P") return RoleLabel::P;
  if (s == "CG") return RoleLabel::CG;
  if (s.empty() || s == "unlabeled") return RoleLabel::unlabeled;
  return std::nullopt;
}

// Shared identifier tables for one dataset.
struct Registry {
  Dictionary<AuthorId> authors;
  Dictionary<SiteId> sites;
  Dictionary<UpdateId> updates;
};

struct InteractionEvent {
  AuthorId actor;
  SiteId site;
  InteractionKind kind = InteractionKind::guestbook;
  std::optional<Timestamp> timestamp;  // absent only for amps
  std::optional<UpdateId> update;      // required for amps and comments

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

struct UpdateEvent {
  AuthorId author;
  SiteId site;
  UpdateId update;
  Timestamp timestamp = 0;
  RoleLabel role_label = RoleLabel::unlabeled;

  friend bool operator==(const UpdateEvent&, const UpdateEvent&) = default;
};

struct DirectedInteraction {
  AuthorId source;
  AuthorId target;
  Timestamp timestamp = 0;
  InteractionKind kind = InteractionKind::guestbook;
  SiteId via_site;

  friend bool operator==(const DirectedInteraction&, const DirectedInteraction&) = default;
};

template <typename T>
struct LoadResult {
  std::vector<T> records;
  std::size_t duplicates_removed = 0;
};

namespace detail {

inline std::string at_line(std::size_t line, std::string_view field, std::string_view what) {
  return "line " + std::to_string(line) + ", field '" + std::string(field) + "': " + std::string(what);
}

// Keeps the first occurrence of each distinct record, preserving input order.
template <typename T, typename Key>
std::size_t remove_exact_duplicates(std::vector<T>& records, Key key) {
  std::vector<std::uint32_t> order(records.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key(records[a]) < key(records[b]); });
  std::vector<char> keep(records.size(), 1);
  std::size_t removed = 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (key(records[order[i]]) == key(records[order[i - 1]])) {
      keep[order[i]] = 0;
      ++removed;
    }
  }
  if (removed == 0) return 0;
  std::size_t out = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) records[out++] = records[i];
  records.resize(out);
  return removed;
}

inline auto event_key(const InteractionEvent& e) {
  return std::tuple(e.actor.value, e.site.value, static_cast<int>(e.kind), e.timestamp.value_or(-1),
                    e.update ? e.update->value : UINT32_MAX);
}

inline auto update_key(const UpdateEvent& u) {
  return std::tuple(u.update.value, u.author.value, u.site.value, u.timestamp, static_cast<int>(u.role_label));
}

// Pulls one string field out of a JSON-lines record; null and "" are absent.
inline std::string json_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw ValidationError(at_line(line, key, "expected string or integer"));
}

// Calls row(line_no, fields) for every data row of a CSV or JSON-lines file,
// with fields ordered as in `columns`.
template <typename Row>
void for_each_row(std::istream& in, Format format, const std::vector<std::string>& columns, Row&& row) {
  csv::LineReader reader(in);
  std::string line, scratch;
  std::vector<std::string_view> raw;
  std::vector<std::string_view> fields(columns.size());
  if (format == Format::csv) {
    if (!reader.next(line)) return;
    csv::split(line, raw, scratch);
    std::vector<std::string> header(raw.begin(), raw.end());
    std::vector<std::string_view> header_views(header.begin(), header.end());
    csv::Header h(header_views, columns);
    while (reader.next(line)) {
      csv::split(line, raw, scratch);
      if (raw.size() != h.width())
        throw ValidationError("line " + std::to_string(reader.line_number()) + ": expected " +
                              std::to_string(h.width()) + " fields, got " + std::to_string(raw.size()));
      for (std::size_t i = 0; i < columns.size(); ++i) fields[i] = raw[h.column(i)];
      row(reader.line_number(), fields);
    }
    return;
  }
  std::vector<std::string> owned(columns.size());
  while (reader.next(line)) {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("line " + std::to_string(reader.line_number()) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw ValidationError("line " + std::to_string(reader.line_number()) + ": expected object");
    for (std::size_t i = 0; i < columns.size(); ++i) {
      owned[i] = json_field(obj, columns[i].c_str(), reader.line_number());
      fields[i] = owned[i];
    }
    row(reader.line_number(), fields);
  }
}

inline Timestamp parse_timestamp(std::string_view s, std::size_t line, std::string_view field) {
  auto v = csv::parse_int(s);
  if (!v) throw ValidationError(at_line(line, field, "timestamp is not an integer: '" + std::string(s) + "'"));
  if (*v < 0) throw ValidationError(at_line(line, field, "timestamp must be >= 0"));
  return *v;
}

}  // namespace detail

inline const std::vector<std::string>& interaction_columns() {
  static const std::vector<std::string> cols{"actor_id", "site_id", "kind", "timestamp", "update_id"};
  return cols;
}

inline const std::vector<std::string>& update_columns() {
  static const std::vector<std::string> cols{"author_id", "site_id", "update_id", "timestamp", "role_label"};
  return cols;
}

inline LoadResult<InteractionEvent> load_events(std::istream& in, Format format, Registry& registry) {
  LoadResult<InteractionEvent> result;
  detail::for_each_row(in, format, interaction_columns(), [&](std::size_t line, const auto& f) {
    InteractionEvent e;
    if (f[0].empty()) throw ValidationError(detail::at_line(line, "actor_id", "empty"));
    if (f[1].empty()) throw ValidationError(detail::at_line(line, "site_id", "empty"));
    auto kind = parse_kind(f[2]);
    if (!kind) throw ValidationError(detail::at_line(line, "kind", "unknown kind '" + std::string(f[2]) + "'"));
    e.kind = *kind;
    if (!f[3].empty()) e.timestamp = detail::parse_timestamp(f[3], line, "timestamp");
    if (!f[4].empty()) e.update = registry.updates.intern(f[4]);
    if (!e.timestamp && e.kind != InteractionKind::amp)
      throw ValidationError(detail::at_line(line, "timestamp", "required for kind " + std::string(to_string(e.kind))));
    if (!e.update && e.kind != InteractionKind::guestbook)
      throw ValidationError(detail::at_line(line, "update_id", "required for kind " + std::string(to_string(e.kind))));
    e.actor = registry.authors.intern(f[0]);
    e.site = registry.sites.intern(f[1]);
    result.records.push_back(e);
  });
  result.duplicates_removed = detail::remove_exact_duplicates(result.records, detail::event_key);
  return result;
}

inline LoadResult<InteractionEvent> load_events(const std::string& path, Format format, Registry& registry) {
  auto in = csv::open_input(path);
  return load_events(in, format, registry);
}

inline LoadResult<UpdateEvent> load_updates(std::istream& in, Format format, Registry& registry) {
  LoadResult<UpdateEvent> result;
  detail::for_each_row(in, format, update_columns(), [&](std::size_t line, const auto& f) {
    UpdateEvent u;
    if (f[0].empty()) throw ValidationError(detail::at_line(line, "author_id", "empty"));
    if (f[1].empty()) throw ValidationError(detail::at_line(line, "site_id", "empty"));
    if (f[2].empty()) throw ValidationError(detail::at_line(line, "update_id", "empty"));
    if (f[3].empty()) throw ValidationError(detail::at_line(line, "timestamp", "empty"));
    u.timestamp = detail::parse_timestamp(f[3], line, "timestamp");
    auto label = parse_role_label(f[4]);
    if (!label) throw ValidationError(detail::at_line(line, "role_label", "unknown label '" + std::string(f[4]) + "'"));
    u.role_label = *label;
    u.author = registry.authors.intern(f[0]);
    u.site = registry.sites.intern(f[1]);
    u.update = registry.updates.intern(f[2]);
    result.records.push_back(u);
  });
  result.duplicates_removed = detail::remove_exact_duplicates(result.records, detail::update_key);
  // After exact-duplicate removal any repeated update_id is a conflict.
  std::vector<char> seen(registry.updates.size(), 0);
  for (const auto& u : result.records) {
    if (seen[u.update.value]) throw ValidationError("update_id '" + registry.updates.name(u.update) + "' is not unique");
    seen[u.update.value] = 1;
  }
  return result;
}

inline LoadResult<UpdateEvent> load_updates(const std::string& path, Format format, Registry& registry) {
  auto in = csv::open_input(path);
  return load_updates(in, format, registry);
}

// Amps carry no timestamp of their own; they take the publication time of
// the update they react to.
inline std::vector<InteractionEvent> resolve_amp_timestamps(std::vector<InteractionEvent> events,
                                                            std::span<const UpdateEvent> updates,
                                                            const Registry& registry) {
  constexpr Timestamp kMissing = -1;
  std::vector<Timestamp> published(registry.updates.size(), kMissing);
  for (const auto& u : updates) published[u.update.value] = u.timestamp;

  std::vector<std::string> unresolved;
  for (auto& e : events) {
    if (e.kind != InteractionKind::amp) continue;
    Timestamp t = e.update && e.update->value < published.size() ? published[e.update->value] : kMissing;
    if (t == kMissing) {
      unresolved.push_back(e.update ? registry.updates.name(*e.update) : std::string("<none>"));
      continue;
    }
    e.timestamp = t;
  }
  if (!unresolved.empty()) {
    std::sort(unresolved.begin(), unresolved.end());
    unresolved.erase(std::unique(unresolved.begin(), unresolved.end()), unresolved.end());
    std::string msg = "amps reference unknown update ids:";
    for (const auto& id : unresolved) msg += " " + id;
    throw ValidationError(msg);
  }
  return events;
}

struct FilterResult {
  std::vector<InteractionEvent> kept;
  std::size_t removed = 0;
};

inline std::uint64_t pack(std::uint32_t hi, std::uint32_t lo) { return (std::uint64_t{hi} << 32) | lo; }

// Drops interactions on any site the actor has ever authored on. The test is
// time-independent: a later update voids earlier interactions too.
inline FilterResult filter_self_interactions(std::vector<InteractionEvent> events, std::span<const UpdateEvent> updates) {
  std::unordered_set<std::uint64_t> authored;
  authored.reserve(updates.size());
  for (const auto& u : updates) authored.insert(pack(u.author.value, u.site.value));

  FilterResult result;
  std::size_t out = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (authored.contains(pack(events[i].actor.value, events[i].site.value))) {
      ++result.removed;
      continue;
    }
    events[out++] = events[i];
  }
  events.resize(out);
  result.kept = std::move(events);
  return result;
}

// Per-site author index used by the projection.
class SiteAuthorIndex {
 public:
  struct Entry {
    Timestamp first_update;
    AuthorId author;
  };

  SiteAuthorIndex(std::span<const UpdateEvent> updates, std::size_t n_sites) : by_first_(n_sites), patients_(n_sites) {
    // First update per (site, author), and whether any of their updates is P.
    std::vector<std::tuple<std::uint32_t, std::uint32_t, Timestamp, bool>> rows;
    rows.reserve(updates.size());
    for (const auto& u : updates)
      rows.emplace_back(u.site.value, u.author.value, u.timestamp, u.role_label == RoleLabel::P);
    std::sort(rows.begin(), rows.end());
    for (std::size_t i = 0; i < rows.size();) {
      auto [site, author, first, p] = rows[i];
      bool any_p = false;
      std::size_t j = i;
      for (; j < rows.size() && std::get<0>(rows[j]) == site && std::get<1>(rows[j]) == author; ++j)
        any_p = any_p || std::get<3>(rows[j]);
      by_first_[site].push_back({first, AuthorId{author}});
      if (any_p) patients_[site].push_back({first, AuthorId{author}});
      i = j;
    }
    for (auto& v : by_first_)
      std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.first_update, a.author) < std::tie(b.first_update, b.author);
      });
  }

  // Authors whose first update on the site is strictly before t.
  std::span<const Entry> prior(SiteId site, Timestamp t) const {
    if (site.value >= by_first_.size()) return {};
    const auto& v = by_first_[site.value];
    auto end = std::partition_point(v.begin(), v.end(), [t](const Entry& e) { return e.first_update < t; });
    return {v.data(), static_cast<std::size_t>(end - v.begin())};
  }

  // Authors with at least one P-labeled update on the site, with their first
  // update time on it (of any label).
  std::span<const Entry> patients(SiteId site) const {
    if (site.value >= patients_.size()) return {};
    return patients_[site.value];
  }

 private:
  std::vector<std::vector<Entry>> by_first_;
  std::vector<std::vector<Entry>> patients_;
};

// Links each interaction to every author who updated the site strictly
// before it, and to every author who publishes a patient-labeled update on
// the site at any time. Both sets are merged, so each target appears at most
// once per event.
inline std::vector<DirectedInteraction> project_to_author_edges(std::span<const InteractionEvent> events,
                                                                std::span<const UpdateEvent> updates,
                                                                std::size_t n_sites) {
  for (const auto& u : updates) n_sites = std::max<std::size_t>(n_sites, u.site.value + 1);
  for (const auto& e : events) n_sites = std::max<std::size_t>(n_sites, e.site.value + 1);
  SiteAuthorIndex index(updates, n_sites);

  auto visit = [&](const InteractionEvent& e, auto&& emit) {
    if (!e.timestamp) throw ValidationError("project_to_author_edges: unresolved amp timestamp");
    const Timestamp t = *e.timestamp;
    for (const auto& p : index.prior(e.site, t))
      if (p.author != e.actor) emit(p.author);
    for (const auto& p : index.patients(e.site))
      if (p.first_update >= t && p.author != e.actor) emit(p.author);
  };

  std::size_t total = 0;
  for (const auto& e : events) visit(e, [&](AuthorId) { ++total; });
  std::vector<DirectedInteraction> out;
  out.reserve(total);
  for (const auto& e : events)
    visit(e, [&](AuthorId target) { out.push_back({e.actor, target, *e.timestamp, e.kind, e.site}); });
  return out;
}

inline std::size_t unique_pair_count(std::span<const DirectedInteraction> interactions) {
  std::vector<std::uint64_t> keys;
  keys.reserve(interactions.size());
  for (const auto& d : interactions) keys.push_back(pack(d.source.value, d.target.value));
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

// Writers

inline void write_events_csv(std::ostream& out, std::span<const InteractionEvent> events, const Registry& reg) {
  out << "actor_id,site_id,kind,timestamp,update_id\n";
  for (const auto& e : events) {
    out << csv::quote(reg.authors.name(e.actor)) << ',' << csv::quote(reg.sites.name(e.site)) << ','
        << to_string(e.kind) << ',';
    if (e.timestamp) out << *e.timestamp;
    out << ',';
    if (e.update) out << csv::quote(reg.updates.name(*e.update));
    out << '\n';
  }
}

inline void write_interactions_csv(std::ostream& out, std::span<const DirectedInteraction> edges, const Registry& reg) {
  out << "source,target,timestamp,kind,via_site\n";
  for (const auto& d : edges)
    out << csv::quote(reg.authors.name(d.source)) << ',' << csv::quote(reg.authors.name(d.target)) << ','
        << d.timestamp << ',' << to_string(d.kind) << ',' << csv::quote(reg.sites.name(d.via_site)) << '\n';
}

inline std::vector<DirectedInteraction> read_interactions_csv(std::istream& in, Registry& reg) {
  std::vector<DirectedInteraction> out;
  static const std::vector<std::string> cols{"source", "target", "timestamp", "kind", "via_site"};
  detail::for_each_row(in, Format::csv, cols, [&](std::size_t line, const auto& f) {
    auto kind = parse_kind(f[3]);
    if (!kind) throw ValidationError(detail::at_line(line, "kind", "unknown kind '" + std::string(f[3]) + "'"));
    DirectedInteraction d{reg.authors.intern(f[0]), reg.authors.intern(f[1]),
                          detail::parse_timestamp(f[2], line, "timestamp"), *kind, reg.sites.intern(f[4])};
    if (d.source == d.target) throw ValidationError(detail::at_line(line, "target", "self-edge"));
    out.push_back(d);
  });
  return out;
}

}  // namespace netchoice
