#pragma once

// Fixture builders and brute-force oracles shared by the test binaries.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "netchoice/choice_instance.hpp"
#include "netchoice/graph.hpp"
#include "netchoice/ingest.hpp"

namespace testing_support {

using namespace netchoice;

// Builds logs by name so expectations read like the scenario.
struct LogBuilder {
  Registry reg;
  std::vector<UpdateEvent> updates;
  std::vector<InteractionEvent> events;

  AuthorId author(const std::string& n) { return reg.authors.intern(n); }
  SiteId site(const std::string& n) { return reg.sites.intern(n); }

  UpdateId update(const std::string& a, const std::string& s, Timestamp t, RoleLabel label = RoleLabel::CG) {
    auto id = reg.updates.intern("u" + std::to_string(updates.size()));
    updates.push_back({author(a), site(s), id, t, label});
    return id;
  }

  void event(const std::string& a, const std::string& s, Timestamp t, InteractionKind kind = InteractionKind::guestbook) {
    InteractionEvent e{author(a), site(s), kind, t, std::nullopt};
    if (kind != InteractionKind::guestbook) e.update = reg.updates.intern("ref" + std::to_string(events.size()));
    events.push_back(e);
  }

  void amp(const std::string& a, const std::string& s, UpdateId u) {
    events.push_back({author(a), site(s), InteractionKind::amp, std::nullopt, u});
  }
};

inline DirectedInteraction di(std::uint32_t s, std::uint32_t t, Timestamp time) {
  return {AuthorId{s}, AuthorId{t}, time, InteractionKind::guestbook, SiteId{0}};
}

// Random edge stream over n nodes, no self-edges; times drawn with ties.
inline std::vector<DirectedInteraction> random_stream(std::uint64_t seed, std::uint32_t n, std::size_t m,
                                                      Timestamp max_time = 0) {
  std::mt19937_64 rng(seed);
  if (max_time == 0) max_time = static_cast<Timestamp>(m);
  std::uniform_int_distribution<std::uint32_t> node(0, n - 1);
  std::uniform_int_distribution<Timestamp> when(0, max_time);
  std::vector<DirectedInteraction> out;
  while (out.size() < m) {
    auto a = node(rng), b = node(rng);
    if (a == b) continue;
    out.push_back(di(a, b, when(rng)));
  }
  return out;
}

// Undirected BFS labelling over the given edges; label = smallest member.
inline std::vector<std::uint32_t> bfs_components(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::uint32_t> label(n, UINT32_MAX);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (label[s] != UINT32_MAX) continue;
    std::queue<std::uint32_t> q;
    q.push(s);
    label[s] = s;
    while (!q.empty()) {
      auto v = q.front();
      q.pop();
      for (auto w : adj[v])
        if (label[w] == UINT32_MAX) {
          label[w] = s;
          q.push(w);
        }
    }
  }
  return label;
}

// Component sizes over `active` nodes only, using BFS labels.
inline std::size_t largest_active_component(const std::vector<std::uint32_t>& label, const std::vector<char>& active) {
  std::map<std::uint32_t, std::size_t> size;
  std::size_t best = 0;
  for (std::size_t v = 0; v < label.size(); ++v)
    if (active[v]) best = std::max(best, ++size[label[v]]);
  return best;
}

// Sizes of strongly connected components from the transitive closure.
inline std::vector<std::size_t> closure_scc_sizes(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                                  const std::vector<char>& active) {
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t v = 0; v < n; ++v) reach[v][v] = 1;
  for (auto [a, b] : edges) reach[a][b] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  std::vector<char> done(n, 0);
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < n; ++v) {
    if (!active[v] || done[v]) continue;
    std::size_t s = 0;
    for (std::size_t w = 0; w < n; ++w)
      if (active[w] && reach[v][w] && reach[w][v]) {
        done[w] = 1;
        ++s;
      }
    sizes.push_back(s);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

// Choice instance over a single feature column.
inline ChoiceInstance instance(std::vector<std::vector<double>> rows, std::size_t chosen = 0) {
  ChoiceInstance c;
  c.chooser = "c";
  c.chosen = chosen;
  c.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    c.alternatives.push_back("alt" + std::to_string(r));
    for (std::size_t k = 0; k < rows[r].size(); ++k)
      c.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
  }
  for (std::size_t k = 0; k < rows.front().size(); ++k) c.feature_names.push_back("x" + std::to_string(k));
  return c;
}

// Four {x=1, x=0} pairs; x=1 chosen in three of them. MLE is ln 3.
inline std::vector<ChoiceInstance> closed_form_fixture() {
  return {instance({{1}, {0}}, 0), instance({{1}, {0}}, 0), instance({{1}, {0}}, 0), instance({{1}, {0}}, 1)};
}

// Random instances with p features and 2..max_alts alternatives.
inline std::vector<ChoiceInstance> random_instances(std::uint64_t seed, std::size_t count, std::size_t p, std::size_t max_alts = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<ChoiceInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t alts = 2 + rng() % (max_alts - 1);
    std::vector<std::vector<double>> rows(alts, std::vector<double>(p));
    for (auto& r : rows)
      for (auto& x : r) x = z(rng);
    out.push_back(instance(rows, rng() % alts));
  }
  return out;
}

// Synthetic site logs on disk: sites owned by the first authors, each owner
// posting labeled updates, everyone visiting random sites.
struct LogFiles {
  std::filesystem::path updates;
  std::filesystem::path interactions;
  std::filesystem::path sites;
  std::filesystem::path geo;
};

inline LogFiles write_site_logs(const std::filesystem::path& dir, std::uint64_t seed, std::size_t n_authors,
                                std::size_t n_events, Timestamp span = 400 * kSecondsPerDay) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  const std::size_t n_sites = std::max<std::size_t>(1, n_authors / 2);
  const char* labels[] = {"P", "CG", "unlabeled"};
  LogFiles f{dir / "updates.csv", dir / "interactions.csv", dir / "sites.csv", dir / "geo.csv"};
  // a third of the authors own the sites, some of them two
  const std::size_t owners = std::max<std::size_t>(1, n_authors / 3);
  const char* conditions[] = {"cancer", "stroke", "transplant", ""};
  const char* states[] = {"MN", "WI", "IA"};
  {
    std::ofstream s(f.sites);
    s << "site_id,created_at,health_condition\n";
    for (std::size_t i = 0; i < n_sites; ++i) s << 's' << i << ",0," << conditions[rng() % 4] << '\n';
    std::ofstream g(f.geo);
    g << "author_id,timestamp,state\n";
    for (std::size_t a = 0; a < n_authors; ++a) {
      const auto home = rng() % 3;
      for (int k = 0; k < 12; ++k)
        g << 'a' << a << ',' << rng() % 1000 << ',' << states[rng() % 5 == 0 ? rng() % 3 : home] << '\n';
    }
  }
  std::vector<Timestamp> update_time;
  {
    std::ofstream u(f.updates);
    u << "author_id,site_id,update_id,timestamp,role_label\n";
    for (std::size_t s = 0; s < n_sites; ++s) {
      const Timestamp start = static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(span / 2));
      for (int k = 0; k < 3; ++k) {
        const Timestamp t = start + static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(span / 2));
        const auto who = k == 2 && rng() % 3 == 0 ? rng() % owners : s % owners;
        u << 'a' << who << ",s" << s << ",u" << update_time.size() << ',' << t << ',' << labels[rng() % 3] << '\n';
        update_time.push_back(t);
      }
    }
  }
  std::ofstream e(f.interactions);
  e << "actor_id,site_id,kind,timestamp,update_id\n";
  for (std::size_t i = 0; i < n_events; ++i) {
    const auto actor = rng() % n_authors;
    const auto site = rng() % n_sites;
    const auto ref = site * 3 + rng() % 3;
    switch (rng() % 4) {
      case 0:
        e << 'a' << actor << ",s" << site << ",amp,,u" << ref << '\n';
        break;
      case 1:
        e << 'a' << actor << ",s" << site << ",comment," << update_time[ref] + static_cast<Timestamp>(rng() % 86400) << ",u"
          << ref << '\n';
        break;
      default:
        e << 'a' << actor << ",s" << site << ",guestbook," << static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(span))
          << ",\n";
    }
  }
  return f;
}

}  // namespace testing_support
