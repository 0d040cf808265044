#pragma once

// Directed temporal author network with a monotone time cursor. All queries
// describe the state strictly before the cursor.

#include <algorithm>
#include <limits>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "netchoice/common.hpp"
#include "netchoice/csv.hpp"
#include "netchoice/disjoint_sets.hpp"
#include "netchoice/ingest.hpp"

namespace netchoice {

struct Edge {
  AuthorId source;
  AuthorId target;
  Timestamp first_time = 0;
  std::uint32_t interaction_count = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

inline constexpr Timestamp kNever = std::numeric_limits<Timestamp>::max();

// Earliest of first update and first interaction per author. Authors that
// never appear stay at kNever.
inline std::vector<Timestamp> activation_times(std::size_t n_authors, std::span<const UpdateEvent> updates,
                                               std::span<const InteractionEvent> events) {
  std::vector<Timestamp> first(n_authors, kNever);
  auto bump = [&](AuthorId a, Timestamp t) {
    if (a.value >= first.size()) first.resize(a.value + 1, kNever);
    first[a.value] = std::min(first[a.value], t);
  };
  for (const auto& u : updates) bump(u.author, u.timestamp);
  for (const auto& e : events)
    if (e.timestamp) bump(e.actor, *e.timestamp);
  return first;
}

class TemporalGraph {
 public:
  TemporalGraph() = default;

  explicit TemporalGraph(std::size_t n_nodes) { resize(n_nodes); }

  // One edge per ordered pair at its first interaction time; later repeats
  // only bump interaction_count. Edge endpoints are activated no later than
  // the edge itself.
  static TemporalGraph build(std::span<const DirectedInteraction> interactions, std::vector<Timestamp> activation = {}) {
    std::size_t n = activation.size();
    for (const auto& d : interactions) n = std::max<std::size_t>(n, std::max(d.source.value, d.target.value) + 1);
    activation.resize(n, kNever);

    std::vector<std::pair<std::uint64_t, Timestamp>> keyed;
    keyed.reserve(interactions.size());
    for (const auto& d : interactions) {
      if (d.source == d.target) throw ValidationError("self-edge in interaction stream");
      keyed.emplace_back(pack(d.source.value, d.target.value), d.timestamp);
      activation[d.source.value] = std::min(activation[d.source.value], d.timestamp);
      activation[d.target.value] = std::min(activation[d.target.value], d.timestamp);
    }
    std::sort(keyed.begin(), keyed.end());

    TemporalGraph g(n);
    for (std::size_t i = 0; i < keyed.size();) {
      std::size_t j = i;
      while (j < keyed.size() && keyed[j].first == keyed[i].first) ++j;
      auto key = keyed[i].first;
      g.edges_.push_back({AuthorId{static_cast<std::uint32_t>(key >> 32)}, AuthorId{static_cast<std::uint32_t>(key)},
                          keyed[i].second, static_cast<std::uint32_t>(j - i)});
      i = j;
    }
    keyed = {};
    std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.first_time, a.source, a.target) < std::tie(b.first_time, b.source, b.target);
    });
    g.edge_index_.reserve(g.edges_.size());
    for (std::size_t i = 0; i < g.edges_.size(); ++i)
      g.edge_index_.emplace(pack(g.edges_[i].source.value, g.edges_[i].target.value), static_cast<std::uint32_t>(i));

    for (std::size_t v = 0; v < n; ++v)
      if (activation[v] != kNever) g.activations_.emplace_back(activation[v], AuthorId{static_cast<std::uint32_t>(v)});
    std::sort(g.activations_.begin(), g.activations_.end());
    g.activation_ = std::move(activation);
    return g;
  }

  std::size_t node_count() const { return out_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  Timestamp cursor() const { return cursor_; }

  // Applies every activation and edge with time < t.
  void advance_to(Timestamp t) {
    if (t < cursor_)
      throw ValidationError("advance_to: cursor must not move backwards (" + std::to_string(t) + " < " +
                            std::to_string(cursor_) + ")");
    while (next_activation_ < activations_.size() && activations_[next_activation_].first < t) {
      auto v = activations_[next_activation_++].second;
      if (!activated_[v.value]) {
        activated_[v.value] = 1;
        activated_list_.push_back(v);
      }
    }
    while (next_edge_ < edges_.size() && edges_[next_edge_].first_time < t) apply(edges_[next_edge_++]);
    cursor_ = t;
  }

  // Schedules activation of a node. Must not precede already scheduled
  // activations or the cursor.
  void activate(AuthorId v, Timestamp t) {
    check_node(v);
    if (t < cursor_ || (!activations_.empty() && t < activations_.back().first))
      throw ValidationError("activate: activations must be appended in time order");
    if (activation_[v.value] <= t) return;
    activation_[v.value] = t;
    activations_.emplace_back(t, v);
  }

  // Appends a new interaction. Time must be >= the cursor and >= the last
  // edge time; a repeated pair only increments its count.
  void add_interaction(AuthorId source, AuthorId target, Timestamp t) {
    check_node(source);
    check_node(target);
    if (source == target) throw ValidationError("add_interaction: self-edge");
    if (t < cursor_) throw ValidationError("add_interaction: time precedes cursor");
    if (activation_[source.value] > t || activation_[target.value] > t)
      throw ValidationError("add_interaction: endpoint not activated by edge time");
    auto [it, inserted] = edge_index_.try_emplace(pack(source.value, target.value), static_cast<std::uint32_t>(edges_.size()));
    if (!inserted) {
      ++edges_[it->second].interaction_count;
      return;
    }
    if (!edges_.empty() && t < edges_.back().first_time) {
      edge_index_.erase(it);
      throw ValidationError("add_interaction: edges must be appended in time order");
    }
    edges_.push_back({source, target, t, 1});
  }

  bool is_activated(AuthorId v) const { return v.value < activated_.size() && activated_[v.value]; }
  Timestamp activation_time(AuthorId v) const { return v.value < activation_.size() ? activation_[v.value] : kNever; }
  std::span<const AuthorId> activated() const { return activated_list_; }
  std::size_t activated_count() const { return activated_list_.size(); }

  std::size_t out_degree(AuthorId v) const { return v.value < out_.size() ? out_[v.value].size() : 0; }
  std::size_t in_degree(AuthorId v) const { return v.value < in_.size() ? in_[v.value].size() : 0; }
  std::span<const AuthorId> out_neighbors(AuthorId v) const { return out_.at(v.value); }
  std::span<const AuthorId> in_neighbors(AuthorId v) const { return in_.at(v.value); }
  // Distinct neighbors ignoring direction.
  std::span<const AuthorId> neighbors(AuthorId v) const { return undirected_.at(v.value); }

  bool has_edge(AuthorId a, AuthorId b) const {
    auto it = edge_index_.find(pack(a.value, b.value));
    return it != edge_index_.end() && it->second < next_edge_;
  }

  bool adjacent(AuthorId a, AuthorId b) const { return has_edge(a, b) || has_edge(b, a); }

  bool same_wcc(AuthorId a, AuthorId b) const {
    if (a == b) return true;
    if (a.value >= node_count() || b.value >= node_count()) return false;
    return components_.same(a.value, b.value);
  }

  std::size_t component_size(AuthorId v) const { return v.value < node_count() ? components_.set_size(v.value) : 1; }

  // Some c outside {a, b} adjacent to both, ignoring direction.
  bool is_friend_of_friend(AuthorId a, AuthorId b) const {
    if (a == b || a.value >= node_count() || b.value >= node_count()) return false;
    const auto& na = undirected_[a.value];
    const auto& nb = undirected_[b.value];
    const auto& small = na.size() <= nb.size() ? na : nb;
    AuthorId other = na.size() <= nb.size() ? b : a;
    for (auto c : small)
      if (c != a && c != b && adjacent(c, other)) return true;
    return false;
  }

  std::size_t largest_wcc_size() const { return activated_list_.empty() ? 0 : components_.largest_size(); }

  double largest_wcc_share() const {
    if (activated_list_.empty()) throw ValidationError("largest_wcc_share: no activated nodes");
    return static_cast<double>(components_.largest_size()) / static_cast<double>(activated_list_.size());
  }

  // Sizes of weakly connected components over activated nodes, descending.
  std::vector<std::size_t> wcc_sizes() const {
    std::vector<std::size_t> sizes;
    for (auto v : activated_list_)
      if (components_.find(v.value) == v.value) sizes.push_back(components_.set_size(v.value));
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
  }

  // Strongly connected component sizes over activated nodes (Tarjan,
  // iterative), descending.
  std::vector<std::size_t> scc_snapshot() const {
    const std::size_t n = node_count();
    constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> call;  // (node, next child position)
    std::vector<std::size_t> sizes;
    std::uint32_t counter = 0;

    for (auto root : activated_list_) {
      if (index[root.value] != kUnvisited) continue;
      call.emplace_back(root.value, 0);
      while (!call.empty()) {
        auto& [v, pos] = call.back();
        if (pos == 0 && index[v] == kUnvisited) {
          index[v] = low[v] = counter++;
          stack.push_back(v);
          on_stack[v] = 1;
        }
        const auto& succ = out_[v];
        if (pos < succ.size()) {
          auto w = succ[pos++].value;
          if (index[w] == kUnvisited) {
            call.emplace_back(w, 0);
          } else if (on_stack[w]) {
            low[v] = std::min(low[v], index[w]);
          }
          continue;
        }
        if (low[v] == index[v]) {
          std::size_t size = 0;
          std::uint32_t w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            ++size;
          } while (w != v);
          sizes.push_back(size);
        }
        auto finished = v;
        call.pop_back();
        if (!call.empty()) {
          auto parent = call.back().first;
          low[parent] = std::min(low[parent], low[finished]);
        }
      }
    }
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
  }

  void write_edges_csv(std::ostream& out, const Registry& reg) const {
    out << "source,target,first_time,interaction_count\n";
    for (const auto& e : edges_)
      out << csv::quote(reg.authors.name(e.source)) << ',' << csv::quote(reg.authors.name(e.target)) << ','
          << e.first_time << ',' << e.interaction_count << '\n';
  }

 private:
  void resize(std::size_t n) {
    out_.resize(n);
    in_.resize(n);
    undirected_.resize(n);
    activated_.resize(n, 0);
    activation_.resize(n, kNever);
    components_.reset(n);
  }

  void check_node(AuthorId v) const {
    if (v.value >= node_count()) throw ValidationError("unknown node id " + std::to_string(v.value));
  }

  void apply(const Edge& e) {
    out_[e.source.value].push_back(e.target);
    in_[e.target.value].push_back(e.source);
    if (!has_edge(e.target, e.source)) {
      undirected_[e.source.value].push_back(e.target);
      undirected_[e.target.value].push_back(e.source);
    }
    components_.unite(e.source.value, e.target.value);
  }

  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_index_;
  std::vector<std::pair<Timestamp, AuthorId>> activations_;
  std::vector<Timestamp> activation_;

  std::vector<std::vector<AuthorId>> out_, in_, undirected_;
  std::vector<char> activated_;
  std::vector<AuthorId> activated_list_;
  DisjointSets<std::uint32_t> components_;

  Timestamp cursor_ = std::numeric_limits<Timestamp>::min();
  std::size_t next_edge_ = 0;
  std::size_t next_activation_ = 0;
};

}  // namespace netchoice
