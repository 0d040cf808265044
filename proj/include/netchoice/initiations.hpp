#pragma once

// Initiations (first edge per ordered pair), their network-context type
// relative to weakly connected components, and timeline statistics.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "netchoice/authors.hpp"
#include "netchoice/common.hpp"
#include "netchoice/disjoint_sets.hpp"
#include "netchoice/graph.hpp"

namespace netchoice {

enum class InitiationType : std::uint8_t { JoiningComponent, BridgingComponent, JoiningIsolates, IntraComponent };

inline constexpr std::size_t kInitiationTypeCount = 4;

inline std::string_view to_string(InitiationType t) {
  switch (t) {
    case InitiationType::JoiningComponent: return "JoiningComponent";
    case InitiationType::BridgingComponent: return "BridgingComponent";
    case InitiationType::JoiningIsolates: return "JoiningIsolates";
    case InitiationType::IntraComponent: return "IntraComponent";
  }
  return "?";
}

inline std::optional<InitiationType> parse_initiation_type(std::string_view s) {
  for (std::size_t i = 0; i < kInitiationTypeCount; ++i)
    if (to_string(static_cast<InitiationType>(i)) == s) return static_cast<InitiationType>(i);
  return std::nullopt;
}

struct Initiation {
  AuthorId initiator;
  AuthorId receiver;
  Timestamp time = 0;
  InitiationType itype = InitiationType::IntraComponent;
  bool is_reciprocal = false;
  bool initiator_was_isolate = false;

  friend bool operator==(const Initiation&, const Initiation&) = default;
};

// The unique-edge stream in (time, source, target) order. Types unset.
inline std::vector<Initiation> extract_initiations(std::span<const Edge> edges) {
  std::vector<Initiation> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back({e.source, e.target, e.first_time});
  std::sort(out.begin(), out.end(), [](const Initiation& a, const Initiation& b) {
    return std::tie(a.time, a.initiator, a.receiver) < std::tie(b.time, b.initiator, b.receiver);
  });
  return out;
}

struct Classification {
  InitiationType itype;
  bool initiator_was_isolate;
};

// `components` must reflect every edge processed before (a, b). A node in a
// size-1 set is an isolate; a component needs at least two authors.
template <typename Index>
Classification classify_initiation(const DisjointSets<Index>& components, AuthorId a, AuthorId b) {
  if (a == b) throw ValidationError("classify_initiation: initiator equals receiver");
  const bool a_isolate = components.set_size(a.value) == 1;
  const bool b_isolate = components.set_size(b.value) == 1;
  if (a_isolate && b_isolate) return {InitiationType::JoiningIsolates, true};
  if (a_isolate || b_isolate) return {InitiationType::JoiningComponent, a_isolate};
  if (components.same(a.value, b.value)) return {InitiationType::IntraComponent, false};
  return {InitiationType::BridgingComponent, false};
}

// Replays the initiation stream in order, filling itype, is_reciprocal and
// initiator_was_isolate. Ties are processed in the stream's order.
inline void classify_initiations(std::span<Initiation> initiations, std::size_t n_nodes = 0) {
  for (const auto& i : initiations)
    n_nodes = std::max<std::size_t>(n_nodes, std::max(i.initiator.value, i.receiver.value) + 1);
  DisjointSets<std::uint32_t> components(n_nodes);
  std::unordered_map<std::uint64_t, Timestamp> seen;
  seen.reserve(initiations.size());
  for (auto& init : initiations) {
    auto c = classify_initiation(components, init.initiator, init.receiver);
    init.itype = c.itype;
    init.initiator_was_isolate = c.initiator_was_isolate;
    auto reverse = seen.find(pack(init.receiver.value, init.initiator.value));
    init.is_reciprocal = reverse != seen.end() && reverse->second < init.time;
    seen.emplace(pack(init.initiator.value, init.receiver.value), init.time);
    components.unite(init.initiator.value, init.receiver.value);
  }
}

inline std::vector<Initiation> classified_initiations(const TemporalGraph& graph) {
  auto out = extract_initiations(graph.edges());
  classify_initiations(out, graph.node_count());
  return out;
}

// Reverse edge strictly before the initiation's time.
inline bool reciprocal_flag(const TemporalGraph& graph, AuthorId a, AuthorId b) {
  return graph.has_edge(b, a);
}

struct WindowStats {
  Timestamp start = 0;
  std::size_t total = 0;
  std::array<std::size_t, kInitiationTypeCount> counts{};
  std::size_t reciprocal = 0;
  std::size_t joining_component_by_isolate = 0;

  // Shares are absent for an empty window.
  std::optional<double> share(InitiationType t) const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(counts[static_cast<std::size_t>(t)]) / static_cast<double>(total);
  }
  std::optional<double> reciprocal_share() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(reciprocal) / static_cast<double>(total);
  }
  // Among JoiningComponent initiations, the share started by the unconnected author.
  std::optional<double> isolate_initiator_share() const {
    auto jc = counts[static_cast<std::size_t>(InitiationType::JoiningComponent)];
    if (jc == 0) return std::nullopt;
    return static_cast<double>(joining_component_by_isolate) / static_cast<double>(jc);
  }
  std::optional<double> bridging_plus_isolates_share() const {
    if (total == 0) return std::nullopt;
    auto n = counts[static_cast<std::size_t>(InitiationType::BridgingComponent)] +
             counts[static_cast<std::size_t>(InitiationType::JoiningIsolates)];
    return static_cast<double>(n) / static_cast<double>(total);
  }

  void add(const Initiation& i) {
    ++total;
    ++counts[static_cast<std::size_t>(i.itype)];
    if (i.is_reciprocal) ++reciprocal;
    if (i.itype == InitiationType::JoiningComponent && i.initiator_was_isolate) ++joining_component_by_isolate;
  }
};

struct TimelineStats {
  Timestamp origin = 0;
  Timestamp window = 0;
  std::vector<WindowStats> windows;
  WindowStats overall;
};

// Buckets initiations into consecutive windows [origin + k*window, ...).
// The origin defaults to the first initiation time. Initiations before the
// origin are ignored.
inline TimelineStats timeline_stats(std::span<const Initiation> initiations, Timestamp window,
                                    std::optional<Timestamp> origin = std::nullopt) {
  if (window <= 0) throw ValidationError("timeline_stats: window must be positive");
  TimelineStats stats;
  stats.window = window;
  if (initiations.empty()) {
    stats.origin = origin.value_or(0);
    return stats;
  }
  Timestamp lo = initiations.front().time, hi = lo;
  for (const auto& i : initiations) {
    lo = std::min(lo, i.time);
    hi = std::max(hi, i.time);
  }
  stats.origin = origin.value_or(lo);
  if (hi < stats.origin) return stats;
  const auto n_windows = static_cast<std::size_t>((hi - stats.origin) / window) + 1;
  stats.windows.resize(n_windows);
  for (std::size_t k = 0; k < n_windows; ++k) stats.windows[k].start = stats.origin + static_cast<Timestamp>(k) * window;
  stats.overall.start = stats.origin;
  for (const auto& i : initiations) {
    if (i.time < stats.origin) continue;
    stats.windows[static_cast<std::size_t>((i.time - stats.origin) / window)].add(i);
    stats.overall.add(i);
  }
  return stats;
}

namespace detail {
inline nlohmann::json optional_json(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json window_json(const WindowStats& w) {
  nlohmann::json counts = nlohmann::json::object(), shares = nlohmann::json::object();
  for (std::size_t k = 0; k < kInitiationTypeCount; ++k) {
    auto t = static_cast<InitiationType>(k);
    counts[std::string(to_string(t))] = w.counts[k];
    shares[std::string(to_string(t))] = optional_json(w.share(t));
  }
  return {{"start", w.start},
          {"total", w.total},
          {"counts", counts},
          {"shares", w.total == 0 ? nlohmann::json(nullptr) : shares},
          {"reciprocal", w.reciprocal},
          {"reciprocal_share", optional_json(w.reciprocal_share())},
          {"joining_component_isolate_initiated_share", optional_json(w.isolate_initiator_share())},
          {"bridging_plus_isolates_share", optional_json(w.bridging_plus_isolates_share())}};
}
}  // namespace detail

inline nlohmann::json to_json(const TimelineStats& s) {
  nlohmann::json windows = nlohmann::json::object();
  for (const auto& w : s.windows) windows[std::to_string(w.start)] = detail::window_json(w);
  return {{"origin", s.origin}, {"window", s.window}, {"windows", windows}, {"overall", detail::window_json(s.overall)}};
}

struct ReciprocationCell {
  std::size_t initiations = 0;
  std::size_t reciprocated = 0;
  std::optional<double> probability() const {
    if (initiations == 0) return std::nullopt;
    return static_cast<double>(reciprocated) / static_cast<double>(initiations);
  }
};

// [initiator role][receiver role]
using ReciprocationMatrix = std::array<std::array<ReciprocationCell, kRoleCount>, kRoleCount>;

// Share of dyad-opening initiations a->b later answered by b->a. Initiations
// that are themselves reciprocations are responses and not counted, nor are
// initiations involving an author without a role.
inline ReciprocationMatrix reciprocation_rate_by_role(std::span<const Initiation> initiations,
                                                      std::span<const std::optional<AuthorRole>> roles) {
  std::unordered_map<std::uint64_t, Timestamp> first;
  first.reserve(initiations.size());
  for (const auto& i : initiations) {
    auto [it, inserted] = first.try_emplace(pack(i.initiator.value, i.receiver.value), i.time);
    if (!inserted) it->second = std::min(it->second, i.time);
  }
  auto role_of = [&](AuthorId a) -> std::optional<AuthorRole> {
    return a.value < roles.size() ? roles[a.value] : std::nullopt;
  };
  ReciprocationMatrix m{};
  for (const auto& i : initiations) {
    if (i.is_reciprocal) continue;
    auto ra = role_of(i.initiator), rb = role_of(i.receiver);
    if (!ra || !rb) continue;
    auto& cell = m[static_cast<std::size_t>(*ra)][static_cast<std::size_t>(*rb)];
    ++cell.initiations;
    auto reverse = first.find(pack(i.receiver.value, i.initiator.value));
    if (reverse != first.end() && reverse->second > i.time) ++cell.reciprocated;
  }
  return m;
}

inline void write_initiations_csv(std::ostream& out, std::span<const Initiation> initiations, const Registry& reg) {
  out << "initiator,receiver,time,itype,is_reciprocal,initiator_was_isolate\n";
  for (const auto& i : initiations)
    out << csv::quote(reg.authors.name(i.initiator)) << ',' << csv::quote(reg.authors.name(i.receiver)) << ',' << i.time
        << ',' << to_string(i.itype) << ',' << (i.is_reciprocal ? 1 : 0) << ',' << (i.initiator_was_isolate ? 1 : 0)
        << '\n';
}

inline std::vector<Initiation> read_initiations_csv(std::istream& in, Registry& reg) {
  std::vector<Initiation> out;
  static const std::vector<std::string> cols{"initiator", "receiver", "time", "itype", "is_reciprocal",
                                             "initiator_was_isolate"};
  auto flag = [](std::string_view s, std::size_t line, std::string_view field) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ValidationError(detail::at_line(line, field, "expected 0/1"));
  };
  detail::for_each_row(in, Format::csv, cols, [&](std::size_t line, const auto& f) {
    auto t = parse_initiation_type(f[3]);
    if (!t) throw ValidationError(detail::at_line(line, "itype", "unknown type '" + std::string(f[3]) + "'"));
    out.push_back({reg.authors.intern(f[0]), reg.authors.intern(f[1]), detail::parse_timestamp(f[2], line, "time"), *t,
                   flag(f[4], line, "is_reciprocal"), flag(f[5], line, "initiator_was_isolate")});
  });
  return out;
}

}  // namespace netchoice
