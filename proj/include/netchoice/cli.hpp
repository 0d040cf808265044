#pragma once

// Command-line driver. Every subcommand reads its inputs, runs one stage of
// the pipeline and writes its artifacts into --out-dir. Each artifact
// carries the hash of the configuration that produced it.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 64 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netchoice/authors.hpp"
#include "netchoice/choices.hpp"
#include "netchoice/estimators.hpp"
#include "netchoice/graph.hpp"
#include "netchoice/ingest.hpp"
#include "netchoice/initiations.hpp"
#include "netchoice/labelshift.hpp"
#include "netchoice/parallel.hpp"
#include "netchoice/report.hpp"

namespace netchoice::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

// Per-stage seed streams: stage seed = derive_seed(global seed, stream).
inline constexpr std::uint64_t kSampleStream = 0x73616d706c65ULL;  // "sample"
inline constexpr std::uint64_t kSynthStream = 0x73796e7468ULL;     // "synth"

struct RunConfig {
  std::string command;
  // inputs
  std::string interactions;
  std::string updates;
  std::string format = "csv";
  std::string geo;
  std::string sites;
  std::string train;
  std::string test;
  std::string data;
  std::string outcome;
  std::string terms;
  std::string reduced;
  std::string holdout;
  std::string target;
  std::string folds;
  std::string labels;
  std::string initiations;
  std::string fits;
  std::string authors;
  // analysis
  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;
  Timestamp timeline_window = 30 * kSecondsPerDay;
  double train_frac = 0.8;
  std::size_t negatives = 24;
  std::uint64_t seed = 0;
  bool include_state = false;
  bool include_health = true;
  bool no_intercept = false;
  std::size_t classes = 2;
  double tol = 1e-8;
  int max_iter = 100;
  // synthetic growth
  std::size_t synth_authors = 500;
  std::size_t synth_choices = 5000;
  std::string beta = "1.5,-0.75";
  std::string features = "is_friend_of_friend;target_indegree_log";
  // execution, excluded from the hash
  std::string out_dir = ".";
  std::size_t threads = 0;
};

// Canonical text of every setting that can change an output.
inline std::string canonical(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](std::string_view k, const auto& v) { os << k << '=' << v << '\n'; };
  kv("command", c.command);
  kv("interactions", c.interactions);
  kv("updates", c.updates);
  kv("format", c.format);
  kv("geo", c.geo);
  kv("sites", c.sites);
  kv("train", c.train);
  kv("test", c.test);
  kv("data", c.data);
  kv("outcome", c.outcome);
  kv("terms", c.terms);
  kv("reduced", c.reduced);
  kv("holdout", c.holdout);
  kv("target", c.target);
  kv("folds", c.folds);
  kv("labels", c.labels);
  kv("initiations", c.initiations);
  kv("fits", c.fits);
  kv("authors", c.authors);
  kv("window_start", c.window_start ? std::to_string(*c.window_start) : "");
  kv("window_end", c.window_end ? std::to_string(*c.window_end) : "");
  kv("timeline_window", c.timeline_window);
  kv("train_frac", format_double(c.train_frac));
  kv("negatives", c.negatives);
  kv("seed", c.seed);
  kv("include_state", c.include_state);
  kv("include_health", c.include_health);
  kv("no_intercept", c.no_intercept);
  kv("classes", c.classes);
  kv("tol", format_double(c.tol));
  kv("max_iter", c.max_iter);
  kv("synth_authors", c.synth_authors);
  kv("synth_choices", c.synth_choices);
  kv("beta", c.beta);
  kv("features", c.features);
  return os.str();
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(canonical(c))); }

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    auto item = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "jsonl" || s == "json-lines") return Format::jsonl;
  throw ValidationError("unknown format '" + s + "' (expected csv or jsonl)");
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required option ") + flag);
}

class Outputs {
 public:
  Outputs(const RunConfig& cfg) : dir_(cfg.out_dir), hash_(config_hash(cfg)) {
    std::filesystem::create_directories(dir_);
  }

  const std::string& hash() const { return hash_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  // CSV, JSON-lines and text files lead with a '#' comment line.
  void write_text(const std::string& name, const std::string& body) const {
    write(name, "# config_hash=" + hash_ + "\n" + body);
  }

  void write_json(const std::string& name, nlohmann::json j) const {
    j["config_hash"] = hash_;
    write(name, j.dump(2) + "\n");
  }

 private:
  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path(name).string() + "'");
    out << content;
  }

  std::filesystem::path dir_;
  std::string hash_;
};

struct Dataset {
  Registry registry;
  std::vector<UpdateEvent> updates;
  std::vector<InteractionEvent> events;  // amps resolved, self-interactions removed
  std::size_t raw_events = 0;
  std::size_t duplicate_events = 0;
  std::size_t duplicate_updates = 0;
  std::size_t self_removed = 0;
};

inline Dataset load_dataset(const RunConfig& cfg) {
  require(cfg.interactions, "--interactions");
  require(cfg.updates, "--updates");
  const auto fmt = parse_format(cfg.format);
  Dataset d;
  auto updates = load_updates(cfg.updates, fmt, d.registry);
  d.updates = std::move(updates.records);
  d.duplicate_updates = updates.duplicates_removed;
  auto events = load_events(cfg.interactions, fmt, d.registry);
  d.duplicate_events = events.duplicates_removed;
  d.raw_events = events.records.size() + events.duplicates_removed;
  auto resolved = resolve_amp_timestamps(std::move(events.records), d.updates, d.registry);
  auto filtered = filter_self_interactions(std::move(resolved), d.updates);
  d.events = std::move(filtered.kept);
  d.self_removed = filtered.removed;
  return d;
}

inline std::vector<SiteInfo> maybe_sites(const RunConfig& cfg, Registry& reg) {
  if (cfg.sites.empty()) return {};
  auto in = csv::open_input(cfg.sites);
  return load_sites(in, reg);
}

inline std::vector<GeoPost> maybe_geo(const RunConfig& cfg, Registry& reg) {
  if (cfg.geo.empty()) return {};
  auto in = csv::open_input(cfg.geo);
  return load_geo_posts(in, reg);
}

struct Network {
  Dataset data;
  std::vector<DirectedInteraction> projected;
  TemporalGraph graph;
  double seconds = 0;
};

inline Network build_network(const RunConfig& cfg, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  Network n;
  n.data = load_dataset(cfg);
  n.projected = project_to_author_edges(n.data.events, n.data.updates, n.data.registry.sites.size());
  n.graph = TemporalGraph::build(n.projected, activation_times(n.data.registry.authors.size(), n.data.updates, n.data.events));
  n.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  err << "ingest+project+build: " << n.data.raw_events << " events, " << n.projected.size() << " author interactions, "
      << n.graph.edges().size() << " edges in " << n.seconds << " s ("
      << static_cast<double>(n.data.raw_events) / std::max(n.seconds, 1e-9) << " events/s)\n";
  return n;
}

inline AuthorTable author_table(const RunConfig& cfg, Dataset& d) {
  auto sites = maybe_sites(cfg, d.registry);
  auto geo = maybe_geo(cfg, d.registry);
  return AuthorTable(d.registry.authors.size(), d.updates, sites, geo);
}

inline std::vector<std::optional<AuthorRole>> roles_of(const AuthorTable& t) {
  std::vector<std::optional<AuthorRole>> out;
  for (const auto& r : t.records()) out.push_back(r.role);
  return out;
}

inline nlohmann::json reciprocation_json(const ReciprocationMatrix& m) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t a = 0; a < kRoleCount; ++a)
    for (std::size_t b = 0; b < kRoleCount; ++b) {
      const auto& cell = m[a][b];
      auto p = cell.probability();
      j[std::string(to_string(static_cast<AuthorRole>(a))) + "->" + std::string(to_string(static_cast<AuthorRole>(b)))] = {
          {"initiations", cell.initiations},
          {"reciprocated", cell.reciprocated},
          {"probability", p ? nlohmann::json(*p) : nlohmann::json(nullptr)}};
    }
  return j;
}

inline std::string choices_text(const std::vector<ChoiceInstance>& v) {
  std::ostringstream os;
  write_choices_jsonl(os, v);
  return os.str();
}

inline std::vector<ChoiceInstance> read_choices(const std::string& path) {
  auto in = csv::open_input(path);
  return read_choices_jsonl(in);
}

inline FitOptions fit_options(const RunConfig& cfg) {
  return {cfg.tol, cfg.max_iter, cfg.threads};
}

inline csv::NumericTable read_table(const std::string& path) {
  auto in = csv::open_input(path);
  return csv::read_numeric_table(in);
}

inline std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  auto d = load_dataset(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outputs o(cfg);
  std::ostringstream body;
  write_events_csv(body, d.events, d.registry);
  o.write_text("interactions_clean.csv", body.str());
  o.write_json("ingest_summary.json", {{"raw_events", d.raw_events},
                                       {"duplicate_events_removed", d.duplicate_events},
                                       {"duplicate_updates_removed", d.duplicate_updates},
                                       {"self_interactions_removed", d.self_removed},
                                       {"kept_events", d.events.size()},
                                       {"updates", d.updates.size()},
                                       {"authors", d.registry.authors.size()},
                                       {"sites", d.registry.sites.size()}});
  out << "kept " << d.events.size() << " of " << d.raw_events << " events (" << d.duplicate_events << " duplicates, "
      << d.self_removed << " self-interactions)\n";
  err << "ingest: " << static_cast<double>(d.raw_events) / std::max(secs, 1e-9) << " events/s\n";
}

inline void cmd_project(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  auto d = load_dataset(cfg);
  auto projected = project_to_author_edges(d.events, d.updates, d.registry.sites.size());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outputs o(cfg);
  std::ostringstream body;
  write_interactions_csv(body, projected, d.registry);
  o.write_text("author_interactions.csv", body.str());
  const auto unique = unique_pair_count(projected);
  o.write_json("project_summary.json", {{"author_site_interactions", d.events.size()},
                                        {"author_author_interactions", projected.size()},
                                        {"unique_pairs", unique}});
  out << d.events.size() << " author->site interactions became " << projected.size() << " author->author interactions ("
      << unique << " unique pairs)\n";
  err << "project: " << static_cast<double>(d.raw_events) / std::max(secs, 1e-9) << " events/s\n";
}

inline void cmd_network(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto net = build_network(cfg, err);
  auto& g = net.graph;
  Outputs o(cfg);
  {
    std::ostringstream body;
    g.write_edges_csv(body, net.data.registry);
    o.write_text("edges.csv", body.str());
  }
  // Largest-WCC series at window boundaries.
  std::ostringstream series;
  series << "time,activated,edges,largest_wcc_size,largest_wcc_share\n";
  Timestamp first = kNever, last = 0;
  for (const auto& e : g.edges()) {
    first = std::min(first, e.first_time);
    last = std::max(last, e.first_time);
  }
  if (first != kNever) {
    Timestamp t = cfg.window_start.value_or(first);
    const Timestamp stop = cfg.window_end.value_or(last + 1);
    std::size_t edges_applied = 0;
    for (; t <= stop; t += cfg.timeline_window) {
      g.advance_to(t);
      while (edges_applied < g.edges().size() && g.edges()[edges_applied].first_time < t) ++edges_applied;
      series << t << ',' << g.activated_count() << ',' << edges_applied << ',' << g.largest_wcc_size() << ',';
      if (g.activated_count() > 0) series << format_double(g.largest_wcc_share());
      series << '\n';
      if (t > kNever - cfg.timeline_window) break;
    }
  }
  o.write_text("wcc_timeseries.csv", series.str());
  g.advance_to(kNever);
  auto scc = g.scc_snapshot();
  auto wcc = g.wcc_sizes();
  std::vector<std::size_t> nontrivial;
  std::size_t singletons = 0;
  for (auto s : scc) (s > 1 ? nontrivial.push_back(s) : void(++singletons));
  nlohmann::json summary{{"nodes_activated", g.activated_count()},
                         {"edges", g.edges().size()},
                         {"author_interactions", net.projected.size()},
                         {"unique_pairs", unique_pair_count(net.projected)},
                         {"wcc_count", wcc.size()},
                         {"largest_wcc_size", wcc.empty() ? 0 : wcc.front()},
                         {"largest_wcc_share", g.activated_count() ? nlohmann::json(g.largest_wcc_share()) : nlohmann::json(nullptr)},
                         {"scc_nontrivial_sizes", nontrivial},
                         {"scc_singletons", singletons}};
  o.write_json("network_summary.json", summary);
  out << g.activated_count() << " authors, " << g.edges().size() << " edges, largest SCC "
      << (scc.empty() ? 0 : scc.front()) << "\n";
}

inline std::vector<Initiation> window_filter(const RunConfig& cfg, const std::vector<Initiation>& all) {
  std::vector<Initiation> out;
  for (const auto& i : all)
    if ((!cfg.window_start || i.time >= *cfg.window_start) && (!cfg.window_end || i.time < *cfg.window_end))
      out.push_back(i);
  return out;
}

inline void cmd_initiations(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto net = build_network(cfg, err);
  auto all = classified_initiations(net.graph);
  auto in_window = window_filter(cfg, all);
  Outputs o(cfg);
  std::ostringstream body;
  write_initiations_csv(body, all, net.data.registry);
  o.write_text("initiations.csv", body.str());
  o.write_json("timeline.json", to_json(timeline_stats(in_window, cfg.timeline_window, cfg.window_start)));
  auto authors = author_table(cfg, net.data);
  o.write_json("reciprocation_by_role.json", reciprocation_json(reciprocation_rate_by_role(in_window, roles_of(authors))));
  out << all.size() << " initiations (" << in_window.size() << " in analysis window)\n";
}

inline void cmd_authors(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.updates, "--updates");
  Registry reg;
  auto updates = load_updates(cfg.updates, parse_format(cfg.format), reg).records;
  auto sites = maybe_sites(cfg, reg);
  auto geo = maybe_geo(cfg, reg);
  AuthorTable table(reg.authors.size(), updates, sites, geo);
  Outputs o(cfg);
  std::ostringstream body;
  table.write_csv(body, reg);
  o.write_text("authors.csv", body.str());
  std::array<std::size_t, kRoleCount> counts{};
  std::size_t shared = 0, states = 0;
  for (const auto& r : table.records()) {
    if (r.role) ++counts[static_cast<std::size_t>(*r.role)];
    if (r.is_shared_account) ++shared;
    if (r.state) ++states;
  }
  out << table.size() << " authors: CG " << counts[0] << ", Mixed " << counts[1] << ", P " << counts[2] << "; shared "
      << shared << "; state-assigned " << states << "\n";
}

inline ChoiceSetResult choice_sets(const RunConfig& cfg, std::ostream& err) {
  auto net = build_network(cfg, err);
  auto authors = author_table(cfg, net.data);
  auto initiations = classified_initiations(net.graph);
  ChoiceSetOptions opt;
  opt.sampler = {cfg.negatives, derive_seed(cfg.seed, kSampleStream)};
  opt.features = standard_features(cfg.include_state, cfg.include_health);
  opt.from = cfg.window_start;
  opt.to = cfg.window_end;
  auto result = build_choice_sets(net.graph, initiations, authors, net.data.registry, opt);
  for (const auto& s : result.skipped) err << "skipped initiation " << s.index << ": " << s.reason << '\n';
  return result;
}

inline void cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto result = choice_sets(cfg, err);
  Outputs o(cfg);
  std::ostringstream body;
  body << "instance,chooser,time,chosen,alternatives\n";
  for (std::size_t i = 0; i < result.instances.size(); ++i) {
    const auto& c = result.instances[i];
    std::string alts;
    for (const auto& a : c.alternatives) alts += (alts.empty() ? "" : "|") + a;
    body << i << ',' << csv::quote(c.chooser) << ',' << c.time << ',' << csv::quote(c.alternatives[c.chosen]) << ','
         << csv::quote(alts) << '\n';
  }
  o.write_text("sampled.csv", body.str());
  out << result.instances.size() << " choice sets, " << result.skipped.size() << " initiations skipped\n";
}

inline void cmd_features(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto result = choice_sets(cfg, err);
  Outputs o(cfg);
  o.write_text("choices.jsonl", choices_text(result.instances));
  auto split = temporal_split(std::move(result.instances), cfg.train_frac, cfg.window_start, cfg.window_end);
  o.write_text("train.jsonl", choices_text(split.train));
  o.write_text("test.jsonl", choices_text(split.test));
  out << split.train.size() << " train and " << split.test.size() << " test instances (boundary "
      << format_double(split.boundary) << ")\n";
}

inline void cmd_fit_mnl(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.train, "--train");
  auto train = read_choices(cfg.train);
  auto fit = mnl_fit(train, fit_options(cfg));
  auto j = to_json(fit);
  std::string text = coefficient_table(fit);
  if (!cfg.test.empty()) {
    auto test = read_choices(cfg.test);
    if (!test.empty()) {
      double acc = mnl_accuracy(fit, test);
      j["test_accuracy"] = acc;
      j["test_instances"] = test.size();
      text += "Test Accuracy: " + format_double(100.0 * acc) + "%\n";
    }
  }
  Outputs o(cfg);
  o.write_json("model_mnl.json", j);
  o.write_text("model_mnl.txt", text);
  out << text;
}

inline Design design_for(const RunConfig& cfg, const csv::NumericTable& table, const std::string& terms) {
  require(cfg.outcome, "--outcome");
  return build_design(table, cfg.outcome, split_list(terms, ','), !cfg.no_intercept);
}

inline void cmd_fit_logit(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.data, "--data");
  auto table = read_table(cfg.data);
  auto d = design_for(cfg, table, cfg.terms);
  auto fit = logistic_fit(d.X, d.y, d.names, fit_options(cfg));
  auto j = to_json(fit);
  std::string text = coefficient_table(fit);
  if (!cfg.reduced.empty()) {
    auto dr = design_for(cfg, table, cfg.reduced);
    auto reduced = logistic_fit(dr.X, dr.y, dr.names, fit_options(cfg));
    auto t = lr_test_nested(fit, reduced);
    j["lr_test"] = {{"statistic", t.statistic}, {"df", t.df1}, {"p_value", t.p_value}};
    text += "LR test vs reduced: chi2 = " + format_double(t.statistic) + ", df = " + format_double(t.df1) +
            ", p = " + format_double(t.p_value) + "\n";
  }
  Outputs o(cfg);
  o.write_json("model_logit.json", j);
  o.write_text("model_logit.txt", text);
  out << text;
}

inline void cmd_fit_ols(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.data, "--data");
  auto table = read_table(cfg.data);
  auto d = design_for(cfg, table, cfg.terms);
  auto fit = ols_fit(d.X, d.y, d.names);
  auto j = to_json(fit);
  std::string text = coefficient_table(fit);
  if (!cfg.reduced.empty()) {
    auto dr = design_for(cfg, table, cfg.reduced);
    auto reduced = ols_fit(dr.X, dr.y, dr.names);
    auto t = f_test_nested(fit, reduced);
    j["f_test"] = {{"statistic", t.statistic}, {"df1", t.df1}, {"df2", t.df2}, {"p_value", t.p_value}};
    text += "F test vs reduced: F = " + format_double(t.statistic) + " on " + format_double(t.df1) + " and " +
            format_double(t.df2) + " df, p = " + format_double(t.p_value) + "\n";
  }
  Outputs o(cfg);
  o.write_json("model_ols.json", j);
  o.write_text("model_ols.txt", text);
  out << text;
}

inline std::vector<int> int_column(const csv::NumericTable& t, const std::string& name) {
  std::vector<int> out;
  for (double v : t.column(name)) {
    if (v != std::floor(v)) throw ValidationError("column '" + name + "' must hold integer class indices");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline void cmd_bbse(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.holdout, "--holdout");
  require(cfg.target, "--target");
  auto holdout = read_table(cfg.holdout);
  auto C = confusion_from_holdout(int_column(holdout, "prediction"), int_column(holdout, "label"), cfg.classes);
  Eigen::VectorXd mu;
  if (cfg.target.ends_with(".json")) {
    auto in = csv::open_input(cfg.target);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("invalid marginal JSON: ") + e.what());
    }
    auto v = (j.is_object() ? j.at("marginal") : j).get<std::vector<double>>();
    mu = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    mu = prediction_marginal(int_column(read_table(cfg.target), "prediction"), cfg.classes);
  }
  auto est = bbse(C, mu);
  auto j = to_json(est);
  std::vector<std::vector<double>> joint(static_cast<std::size_t>(C.joint.rows()));
  for (Eigen::Index r = 0; r < C.joint.rows(); ++r)
    for (Eigen::Index c = 0; c < C.joint.cols(); ++c) joint[static_cast<std::size_t>(r)].push_back(C.joint(r, c));
  j["confusion_joint"] = joint;
  j["n_holdout"] = C.n_holdout;
  if (!cfg.folds.empty()) {
    auto folds = read_table(cfg.folds).column("estimate");
    auto s = fold_proportion(folds);
    j["folds"] = {{"count", folds.size()}, {"mean", s.mean}, {"sd", s.sd}, {"se", s.se}};
  }
  Outputs o(cfg);
  o.write_json("bbse.json", j);
  out << "corrected priors:";
  for (Eigen::Index k = 0; k < est.corrected_priors.size(); ++k) out << ' ' << format_double(est.corrected_priors(k));
  out << '\n';
}

inline void cmd_kappa(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.labels, "--labels");
  auto in = csv::open_input(cfg.labels);
  std::vector<std::string> a, b;
  static const std::vector<std::string> cols{"rater_a", "rater_b"};
  netchoice::detail::for_each_row(in, Format::csv, cols, [&](std::size_t, const auto& f) {
    a.emplace_back(f[0]);
    b.emplace_back(f[1]);
  });
  double k = cohens_kappa<std::string>(a, b);
  Outputs o(cfg);
  o.write_json("kappa.json", {{"kappa", k}, {"items", a.size()}});
  out << "kappa = " << format_double(k) << '\n';
}

inline SynthConfig synth_config(const RunConfig& cfg) {
  SynthConfig s;
  s.beta_true.clear();
  for (const auto& b : split_list(cfg.beta, ',')) {
    auto v = csv::parse_double(b);
    if (!v) throw ValidationError("--beta: '" + b + "' is not a number");
    s.beta_true.push_back(*v);
  }
  s.features.clear();
  for (const auto& f : split_list(cfg.features, ';')) {
    auto feat = parse_feature(f);
    if (!feat) throw ValidationError("--features: unknown feature '" + f + "'");
    s.features.push_back(*feat);
  }
  s.n_authors = cfg.synth_authors;
  s.n_choices = cfg.synth_choices;
  s.candidate_pool_size = cfg.negatives + 1;
  s.seed = derive_seed(cfg.seed, kSynthStream);
  return s;
}

inline void cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  auto result = synth_generate(synth_config(cfg));
  Outputs o(cfg);
  o.write_text("synth_choices.jsonl", choices_text(result.instances));
  auto split = temporal_split(std::move(result.instances), cfg.train_frac);
  o.write_text("synth_train.jsonl", choices_text(split.train));
  o.write_text("synth_test.jsonl", choices_text(split.test));
  out << split.train.size() << " train and " << split.test.size() << " test synthetic instances\n";
}

inline std::vector<std::optional<std::string>> read_author_states(const std::string& path, Registry& reg) {
  auto in = csv::open_input(path);
  std::vector<std::optional<std::string>> states;
  static const std::vector<std::string> cols{"author_id", "state"};
  netchoice::detail::for_each_row(in, Format::csv, cols, [&](std::size_t, const auto& f) {
    auto id = reg.authors.intern(f[0]);
    if (id.value >= states.size()) states.resize(id.value + 1);
    if (!f[1].empty()) states[id.value] = std::string(f[1]);
  });
  return states;
}

inline void cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.initiations, "--initiations");
  Registry reg;
  std::vector<Initiation> initiations;
  {
    auto in = csv::open_input(cfg.initiations);
    initiations = read_initiations_csv(in, reg);
  }
  std::vector<std::optional<std::string>> states;
  if (!cfg.authors.empty()) states = read_author_states(cfg.authors, reg);
  std::vector<NamedFit> fits;
  for (const auto& path : split_list(cfg.fits, ',')) {
    auto in = csv::open_input(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("invalid fit JSON '" + path + "': " + e.what());
    }
    fits.push_back({stem(path), fit_from_json(j)});
  }
  auto report = emit_report(initiations, fits, states);
  Outputs o(cfg);
  o.write_json("report.json", report.json);
  o.write_text("report.txt", report.text);
  out << report.text;
}

}  // namespace detail

// Parses argv, runs one subcommand and returns the process exit code.
inline int run_subcommand(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"netchoice: temporal author-network reconstruction and initiation models"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value configuration file");

  std::optional<std::size_t> threads_flag;
  app.add_option("--seed", cfg.seed, "global seed");
  app.add_option("--negatives", cfg.negatives, "negative samples per choice set")->check(CLI::PositiveNumber);
  app.add_option("--train-frac", cfg.train_frac, "calendar fraction of the window used for training");
  app.add_flag("--include-state", cfg.include_state, "add the shared US state feature");
  app.add_flag("--include-health,!--no-health", cfg.include_health, "include the shared health condition feature");
  app.add_option("--out-dir", cfg.out_dir, "output directory");
  app.add_option("--threads", threads_flag, "worker threads (default NETCHOICE_THREADS or 1)");

  app.add_option("--interactions", cfg.interactions, "interaction log");
  app.add_option("--updates", cfg.updates, "update log");
  app.add_option("--format", cfg.format, "csv or jsonl");
  app.add_option("--geo", cfg.geo, "geo posts CSV (author_id,timestamp,state)");
  app.add_option("--sites", cfg.sites, "site CSV (site_id,created_at,health_condition)");
  app.add_option("--window-start", cfg.window_start, "analysis window start (UTC seconds)");
  app.add_option("--window-end", cfg.window_end, "analysis window end (UTC seconds, exclusive)");
  app.add_option("--timeline-window", cfg.timeline_window, "bucket width for time series (seconds)");
  app.add_option("--train", cfg.train, "training choice sets (JSON-lines)");
  app.add_option("--test", cfg.test, "test choice sets (JSON-lines)");
  app.add_option("--data", cfg.data, "numeric CSV for fit-logit / fit-ols");
  app.add_option("--outcome", cfg.outcome, "outcome column");
  app.add_option("--terms", cfg.terms, "comma-separated terms; a:b is a product");
  app.add_option("--reduced", cfg.reduced, "terms of the nested reduced model");
  app.add_flag("--no-intercept", cfg.no_intercept, "omit the intercept column");
  app.add_option("--tol", cfg.tol, "gradient max-norm tolerance");
  app.add_option("--max-iter", cfg.max_iter, "Newton iteration limit");
  app.add_option("--holdout", cfg.holdout, "held-out source CSV (prediction,label)");
  app.add_option("--target", cfg.target, "target predictions CSV (prediction) or marginal JSON");
  app.add_option("--classes", cfg.classes, "number of classes for bbse")->check(CLI::PositiveNumber);
  app.add_option("--folds", cfg.folds, "per-fold estimates CSV (estimate)");
  app.add_option("--labels", cfg.labels, "two-rater CSV (rater_a,rater_b)");
  app.add_option("--initiations", cfg.initiations, "initiations CSV");
  app.add_option("--fits", cfg.fits, "comma-separated model JSON files");
  app.add_option("--authors", cfg.authors, "authors CSV (for state assignments)");
  app.add_option("--synth-authors", cfg.synth_authors, "authors in the synthetic network");
  app.add_option("--synth-choices", cfg.synth_choices, "synthetic choice instances");
  app.add_option("--beta", cfg.beta, "comma-separated true coefficients");
  app.add_option("--features", cfg.features, "semicolon-separated feature names for synth");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"ingest", "load, resolve amp times, drop self-interactions"},
      {"project", "project author->site interactions onto author->author"},
      {"network", "build the temporal graph; WCC series and SCC summary"},
      {"initiations", "classify initiations; timeline and reciprocation"},
      {"authors", "author roles, shared accounts, conditions, states"},
      {"features", "choice sets with features, split by time"},
      {"sample", "sampled choice sets without features"},
      {"fit-mnl", "conditional multinomial logit"},
      {"fit-logit", "binary logistic regression"},
      {"fit-ols", "least squares with optional nested F test"},
      {"bbse", "label-shift corrected class priors"},
      {"kappa", "Cohen's kappa for two raters"},
      {"synth", "synthetic network growth with known coefficients"},
      {"report", "descriptive report and model tables"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.threads = threads_flag.value_or(default_threads());

  try {
    if (!(cfg.train_frac > 0 && cfg.train_frac < 1)) throw ValidationError("--train-frac must be in (0, 1)");
    if (cfg.window_start && cfg.window_end && !(*cfg.window_start < *cfg.window_end))
      throw ValidationError("--window-start must precede --window-end");
    if (cfg.timeline_window <= 0) throw ValidationError("--timeline-window must be positive");
    const auto& c = cfg.command;
    if (c == "ingest") detail::cmd_ingest(cfg, out, err);
    else if (c == "project") detail::cmd_project(cfg, out, err);
    else if (c == "network") detail::cmd_network(cfg, out, err);
    else if (c == "initiations") detail::cmd_initiations(cfg, out, err);
    else if (c == "authors") detail::cmd_authors(cfg, out, err);
    else if (c == "features") detail::cmd_features(cfg, out, err);
    else if (c == "sample") detail::cmd_sample(cfg, out, err);
    else if (c == "fit-mnl") detail::cmd_fit_mnl(cfg, out, err);
    else if (c == "fit-logit") detail::cmd_fit_logit(cfg, out, err);
    else if (c == "fit-ols") detail::cmd_fit_ols(cfg, out, err);
    else if (c == "bbse") detail::cmd_bbse(cfg, out, err);
    else if (c == "kappa") detail::cmd_kappa(cfg, out, err);
    else if (c == "synth") detail::cmd_synth(cfg, out, err);
    else if (c == "report") detail::cmd_report(cfg, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace netchoice::cli
