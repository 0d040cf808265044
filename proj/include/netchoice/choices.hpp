#pragma once

// Initiations framed as discrete choices: candidate eligibility, negative
// sampling, candidate features, temporal splitting, synthetic growth.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "netchoice/authors.hpp"
#include "netchoice/choice_instance.hpp"
#include "netchoice/common.hpp"
#include "netchoice/graph.hpp"
#include "netchoice/initiations.hpp"

namespace netchoice {

enum class Feature : std::uint8_t {
  target_outdegree_log,
  target_has_indegree,
  target_indegree_log,
  is_reciprocal,
  is_weakly_connected,
  is_friend_of_friend,
  target_role_mixed,
  target_role_p,
  is_author_type_shared,
  is_health_condition_shared,
  target_is_multisite_author,
  target_is_mixedsite_author,
  target_update_count,
  target_update_frequency,
  target_days_since_most_recent_update,
  target_days_since_first_update,
  is_state_assignment_shared,
};

inline constexpr std::size_t kFeatureCount = 17;

inline std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::target_outdegree_log: return "censored_log(target_outdegree, min = 1)";
    case Feature::target_has_indegree: return "target_has_indegree";
    case Feature::target_indegree_log: return "censored_log(target_indegree, min = 1)";
    case Feature::is_reciprocal: return "is_reciprocal";
    case Feature::is_weakly_connected: return "is_weakly_connected";
    case Feature::is_friend_of_friend: return "is_friend_of_friend";
    case Feature::target_role_mixed: return "factor(target_author_type)mixed";
    case Feature::target_role_p: return "factor(target_author_type)p";
    case Feature::is_author_type_shared: return "is_author_type_shared";
    case Feature::is_health_condition_shared: return "is_health_condition_shared";
    case Feature::target_is_multisite_author: return "target_is_multisite_author";
    case Feature::target_is_mixedsite_author: return "target_is_mixedsite_author";
    case Feature::target_update_count: return "target_update_count";
    case Feature::target_update_frequency: return "target_update_frequency";
    case Feature::target_days_since_most_recent_update: return "target_days_since_most_recent_update";
    case Feature::target_days_since_first_update: return "target_days_since_first_update";
    case Feature::is_state_assignment_shared: return "is_state_assignment_shared";
  }
  return "?";
}

// Identifier-style key, convenient on command lines.
inline std::string_view feature_key(Feature f) {
  static constexpr std::string_view keys[kFeatureCount] = {
      "target_outdegree_log",        "target_has_indegree",
      "target_indegree_log",         "is_reciprocal",
      "is_weakly_connected",         "is_friend_of_friend",
      "target_role_mixed",           "target_role_p",
      "is_author_type_shared",       "is_health_condition_shared",
      "target_is_multisite_author",  "target_is_mixedsite_author",
      "target_update_count",         "target_update_frequency",
      "target_days_since_most_recent_update", "target_days_since_first_update",
      "is_state_assignment_shared"};
  return keys[static_cast<std::size_t>(f)];
}

// Accepts either the display name or the key.
inline std::optional<Feature> parse_feature(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    auto f = static_cast<Feature>(i);
    if (feature_name(f) == name || feature_key(f) == name) return f;
  }
  return std::nullopt;
}

using FeatureSet = std::vector<Feature>;

// The initiation-model feature list: 16 columns, 17 with the state match.
inline FeatureSet standard_features(bool include_state = false, bool include_health = true) {
  FeatureSet out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    auto f = static_cast<Feature>(i);
    if (f == Feature::is_state_assignment_shared && !include_state) continue;
    if (f == Feature::is_health_condition_shared && !include_health) continue;
    out.push_back(f);
  }
  return out;
}

inline std::vector<std::string> feature_names(const FeatureSet& features) {
  std::vector<std::string> out;
  for (auto f : features) out.emplace_back(feature_name(f));
  return out;
}

inline double censored_log(double x, double minimum) { return std::log(std::max(x, minimum)); }

// Features of `candidate` as a target for `chooser`, from the graph state
// strictly before t. The graph cursor must sit at t.
inline void build_features(AuthorId chooser, AuthorId candidate, Timestamp t, const TemporalGraph& graph,
                           const AuthorTable& authors, const FeatureSet& features, std::span<double> out) {
  if (graph.cursor() != t) throw ValidationError("build_features: graph cursor is not at the query time");
  if (candidate.value >= graph.node_count() && candidate.value >= authors.size())
    throw ValidationError("build_features: unknown candidate " + std::to_string(candidate.value));
  if (out.size() != features.size()) throw ValidationError("build_features: output size mismatch");

  const AuthorRecord* target = candidate.value < authors.size() ? &authors.record(candidate) : nullptr;
  const AuthorRecord* source = chooser.value < authors.size() ? &authors.record(chooser) : nullptr;
  std::optional<ActivityFeatures> activity;
  auto act = [&]() -> const ActivityFeatures& {
    if (!activity) activity = authors.activity_features(candidate, t);
    return *activity;
  };
  auto role = [](const AuthorRecord* r) { return r ? r->role : std::nullopt; };

  for (std::size_t k = 0; k < features.size(); ++k) {
    double v = 0;
    switch (features[k]) {
      case Feature::target_outdegree_log: v = censored_log(static_cast<double>(graph.out_degree(candidate)), 1); break;
      case Feature::target_has_indegree: v = graph.in_degree(candidate) > 0 ? 1 : 0; break;
      case Feature::target_indegree_log: v = censored_log(static_cast<double>(graph.in_degree(candidate)), 1); break;
      case Feature::is_reciprocal: v = graph.has_edge(candidate, chooser) ? 1 : 0; break;
      case Feature::is_weakly_connected: v = graph.same_wcc(chooser, candidate) ? 1 : 0; break;
      case Feature::is_friend_of_friend: v = graph.is_friend_of_friend(chooser, candidate) ? 1 : 0; break;
      case Feature::target_role_mixed: v = role(target) == AuthorRole::Mixed ? 1 : 0; break;
      case Feature::target_role_p: v = role(target) == AuthorRole::P ? 1 : 0; break;
      case Feature::is_author_type_shared: v = role(target) && role(source) == role(target) ? 1 : 0; break;
      case Feature::is_health_condition_shared:
        v = source && target ? shared_health_condition(source->health_condition, target->health_condition) : 0;
        break;
      case Feature::target_is_multisite_author: v = act().is_multisite ? 1 : 0; break;
      case Feature::target_is_mixedsite_author: v = act().is_mixedsite ? 1 : 0; break;
      case Feature::target_update_count: v = act().update_count; break;
      case Feature::target_update_frequency: v = act().update_frequency; break;
      case Feature::target_days_since_most_recent_update: v = act().days_since_most_recent_update; break;
      case Feature::target_days_since_first_update: v = act().days_since_first_update; break;
      case Feature::is_state_assignment_shared:
        v = source && target && source->state && target->state && *source->state == *target->state ? 1 : 0;
        break;
    }
    out[k] = v;
  }
}

inline std::vector<double> build_features(AuthorId chooser, AuthorId candidate, Timestamp t, const TemporalGraph& graph,
                                          const AuthorTable& authors, const FeatureSet& features) {
  std::vector<double> out(features.size());
  build_features(chooser, candidate, t, graph, authors, features, out);
  return out;
}

// Activated strictly before the cursor, not the chooser, and not already an
// out-neighbor of the chooser. Sorted by id.
inline std::vector<AuthorId> eligible_candidates(const TemporalGraph& graph, AuthorId chooser) {
  std::vector<AuthorId> out;
  out.reserve(graph.activated_count());
  for (auto v : graph.activated())
    if (v != chooser && !graph.has_edge(chooser, v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

struct SamplerConfig {
  std::size_t n_negatives = 24;
  std::uint64_t seed = 0;
};

// Uniform sample without replacement by partial Fisher-Yates. The n-sample
// is a prefix of the (n+1)-sample for the same seed; when the pool has at
// most n members the whole pool comes back, shuffled.
inline std::vector<AuthorId> sample_negatives(std::span<const AuthorId> pool, std::size_t n, std::uint64_t seed) {
  std::vector<AuthorId> work(pool.begin(), pool.end());
  const std::size_t take = std::min(n, work.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    auto j = i + static_cast<std::size_t>(uniform_below(rng, work.size() - i));
    std::swap(work[i], work[j]);
  }
  work.resize(take);
  return work;
}

// Same contract as sample_negatives over eligible_candidates minus `exclude`,
// without materializing the pool when it is dense in the activated set.
inline std::vector<AuthorId> sample_eligible(const TemporalGraph& graph, AuthorId chooser,
                                             std::optional<AuthorId> exclude, std::size_t n, std::uint64_t seed) {
  auto activated = graph.activated();
  auto is_eligible = [&](AuthorId v) {
    return v != chooser && (!exclude || v != *exclude) && !graph.has_edge(chooser, v);
  };
  std::size_t blocked = 0;
  if (graph.is_activated(chooser)) ++blocked;
  if (exclude && graph.is_activated(*exclude) && *exclude != chooser && !graph.has_edge(chooser, *exclude)) ++blocked;
  for (auto v : graph.out_neighbors(chooser))
    if (graph.is_activated(v)) ++blocked;
  const std::size_t pool = activated.size() - std::min(blocked, activated.size());

  if (2 * pool < activated.size()) {
    std::vector<AuthorId> members;
    members.reserve(pool);
    for (auto v : activated)
      if (is_eligible(v)) members.push_back(v);
    std::sort(members.begin(), members.end());
    return sample_negatives(members, n, seed);
  }

  // Rejection sampling over the activated list.
  const std::size_t take = std::min(n, pool);
  std::vector<AuthorId> out;
  out.reserve(take);
  std::mt19937_64 rng(seed);
  while (out.size() < take) {
    auto v = activated[static_cast<std::size_t>(uniform_below(rng, activated.size()))];
    if (!is_eligible(v) || std::find(out.begin(), out.end(), v) != out.end()) continue;
    out.push_back(v);
  }
  return out;
}

struct SkippedInitiation {
  std::size_t index;  // position in the initiation stream
  std::string reason;
};

struct ChoiceSetResult {
  std::vector<ChoiceInstance> instances;
  std::vector<SkippedInitiation> skipped;
};

struct ChoiceSetOptions {
  SamplerConfig sampler;
  FeatureSet features = standard_features();
  std::optional<Timestamp> from;  // only initiations with from <= time < to
  std::optional<Timestamp> to;
};

// Replays the graph chronologically and emits one instance per initiation
// with the receiver first, followed by the sampled negatives. `graph` must
// not have been advanced past the first initiation.
inline ChoiceSetResult build_choice_sets(TemporalGraph& graph, std::span<const Initiation> initiations,
                                         const AuthorTable& authors, const Registry& registry,
                                         const ChoiceSetOptions& options) {
  ChoiceSetResult result;
  const auto names = feature_names(options.features);
  const std::size_t p = options.features.size();
  std::vector<double> row(p);
  for (std::size_t idx = 0; idx < initiations.size(); ++idx) {
    const auto& init = initiations[idx];
    if (options.from && init.time < *options.from) continue;
    if (options.to && init.time >= *options.to) continue;
    if (init.time > graph.cursor()) graph.advance_to(init.time);
    if (graph.cursor() != init.time) throw ValidationError("build_choice_sets: initiations are not chronological");

    const AuthorId chooser = init.initiator, chosen = init.receiver;
    if (!graph.is_activated(chosen) || chosen == chooser || graph.has_edge(chooser, chosen)) {
      result.skipped.push_back({idx, "receiver not eligible at initiation time"});
      continue;
    }
    auto negatives =
        sample_eligible(graph, chooser, chosen, options.sampler.n_negatives, derive_seed(options.sampler.seed, idx));
    if (negatives.empty()) {
      result.skipped.push_back({idx, "no eligible negatives"});
      continue;
    }
    ChoiceInstance inst;
    inst.chooser = registry.authors.name(chooser);
    inst.time = init.time;
    inst.chosen = 0;
    inst.feature_names = names;
    inst.X.resize(static_cast<Eigen::Index>(negatives.size() + 1), static_cast<Eigen::Index>(p));
    auto add = [&](Eigen::Index r, AuthorId who) {
      build_features(chooser, who, init.time, graph, authors, options.features, row);
      for (std::size_t k = 0; k < p; ++k) inst.X(r, static_cast<Eigen::Index>(k)) = row[k];
      inst.alternatives.push_back(registry.authors.name(who));
    };
    add(0, chosen);
    for (std::size_t k = 0; k < negatives.size(); ++k) add(static_cast<Eigen::Index>(k + 1), negatives[k]);
    result.instances.push_back(std::move(inst));
  }
  return result;
}

struct SplitResult {
  std::vector<ChoiceInstance> train;
  std::vector<ChoiceInstance> test;
  double boundary = 0;
};

// Calendar split: instances before start + fraction * (end - start) train,
// the rest test. The window defaults to the instances' time span.
inline SplitResult temporal_split(std::vector<ChoiceInstance> instances, double train_fraction,
                                  std::optional<Timestamp> start = std::nullopt,
                                  std::optional<Timestamp> end = std::nullopt) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ValidationError("temporal_split: fraction must be in (0, 1)");
  SplitResult out;
  if (instances.empty()) return out;
  Timestamp lo = instances.front().time, hi = lo;
  for (const auto& c : instances) {
    lo = std::min(lo, c.time);
    hi = std::max(hi, c.time);
  }
  const double a = static_cast<double>(start.value_or(lo)), b = static_cast<double>(end.value_or(hi));
  if (b < a) throw ValidationError("temporal_split: window end precedes start");
  out.boundary = a + train_fraction * (b - a);
  for (auto& c : instances) (static_cast<double>(c.time) < out.boundary ? out.train : out.test).push_back(std::move(c));
  return out;
}

struct SynthConfig {
  std::vector<double> beta_true{1.5, -0.75};
  FeatureSet features{Feature::is_friend_of_friend, Feature::target_indegree_log};
  std::size_t n_authors = 500;
  std::size_t n_choices = 5000;
  std::size_t candidate_pool_size = 25;  // alternatives per instance, chosen included
  std::uint64_t seed = 1;
};

struct SynthResult {
  std::vector<ChoiceInstance> instances;
  TemporalGraph graph;
};

// Sequential network growth driven by a conditional logit with known
// coefficients. Every author is active from time 0; step k happens at time
// k + 1. Each step draws a chooser uniformly, samples a candidate pool
// uniformly from its eligible targets, and picks the receiver by softmax.
inline SynthResult synth_generate(const SynthConfig& config) {
  if (config.beta_true.size() != config.features.size())
    throw ValidationError("synth_generate: beta_true and features differ in length");
  if (config.n_authors < 3) throw ValidationError("synth_generate: need at least three authors");
  if (config.candidate_pool_size < 2) throw ValidationError("synth_generate: pool must hold at least two alternatives");

  SynthResult out{{}, TemporalGraph(config.n_authors)};
  auto& graph = out.graph;
  for (std::size_t v = 0; v < config.n_authors; ++v) graph.activate(AuthorId{static_cast<std::uint32_t>(v)}, 0);
  const AuthorTable authors(config.n_authors, {});
  const auto names = feature_names(config.features);
  const std::size_t p = config.features.size();
  Eigen::Map<const Eigen::VectorXd> beta(config.beta_true.data(), static_cast<Eigen::Index>(p));

  std::mt19937_64 rng(config.seed);
  std::vector<double> row(p);
  Timestamp t = 0;
  std::size_t attempts = 0;
  while (out.instances.size() < config.n_choices) {
    if (++attempts > 20 * config.n_choices + 1000) throw ValidationError("synth_generate: network saturated");
    graph.advance_to(++t);
    auto chooser = AuthorId{static_cast<std::uint32_t>(uniform_below(rng, config.n_authors))};
    auto pool = sample_eligible(graph, chooser, std::nullopt, config.candidate_pool_size, rng());
    if (pool.size() < 2) continue;

    ChoiceInstance inst;
    inst.chooser = "a" + std::to_string(chooser.value);
    inst.time = t;
    inst.feature_names = names;
    inst.X.resize(static_cast<Eigen::Index>(pool.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < pool.size(); ++r) {
      build_features(chooser, pool[r], t, graph, authors, config.features, row);
      for (std::size_t k = 0; k < p; ++k) inst.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
      inst.alternatives.push_back("a" + std::to_string(pool[r].value));
    }
    Eigen::VectorXd u = inst.X * beta;
    Eigen::VectorXd w = (u.array() - u.maxCoeff()).exp();
    double draw = uniform_unit(rng) * w.sum();
    std::size_t pick = pool.size() - 1;
    for (std::size_t r = 0; r < pool.size(); ++r) {
      draw -= w(static_cast<Eigen::Index>(r));
      if (draw < 0) {
        pick = r;
        break;
      }
    }
    inst.chosen = pick;
    graph.add_interaction(chooser, pool[pick], t);
    out.instances.push_back(std::move(inst));
  }
  graph.advance_to(t + 1);
  return out;
}

}  // namespace netchoice
