#pragma once

// Author-level attributes: role aggregation from update labels, shared
// accounts, health condition and US-state assignment, time-indexed activity.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "netchoice/common.hpp"
#include "netchoice/csv.hpp"
#include "netchoice/ingest.hpp"

namespace netchoice {

enum class AuthorRole : std::uint8_t { CG, Mixed, P };

inline constexpr std::size_t kRoleCount = 3;

inline std::string_view to_string(AuthorRole r) {
  switch (r) {
    case AuthorRole::CG: return "CG";
    case AuthorRole::Mixed: return "Mixed";
    case AuthorRole::P: return "P";
  }
  return "?";
}

inline std::optional<AuthorRole> parse_author_role(std::string_view s) {
  if (s == "CG") return AuthorRole::CG;
  if (s == "Mixed") return AuthorRole::Mixed;
  if (s == "P") return AuthorRole::P;
  return std::nullopt;
}

// Role from the patient-labeled share f = p/n: f < 1/3 is CG, f > 2/3 is P,
// and both boundaries belong to Mixed. Integer comparisons keep the
// boundaries exact.
inline AuthorRole aggregate_role(std::size_t patient_labeled, std::size_t labeled) {
  if (labeled == 0) throw ValidationError("aggregate_role: no labeled updates");
  if (patient_labeled > labeled) throw ValidationError("aggregate_role: patient count exceeds total");
  if (3 * patient_labeled < labeled) return AuthorRole::CG;
  if (3 * patient_labeled > 2 * labeled) return AuthorRole::P;
  return AuthorRole::Mixed;
}

inline AuthorRole aggregate_role(std::span<const bool> is_patient) {
  auto p = static_cast<std::size_t>(std::count(is_patient.begin(), is_patient.end(), true));
  return aggregate_role(p, is_patient.size());
}

// True if any per-site patient share lies in the closed middle band.
inline bool shared_account(std::span<const double> site_fractions) {
  return std::any_of(site_fractions.begin(), site_fractions.end(),
                     [](double f) { return f >= 1.0 / 3.0 && f <= 2.0 / 3.0; });
}

struct LabelCounts {
  std::size_t patient = 0;
  std::size_t labeled = 0;
};

inline bool shared_account(std::span<const LabelCounts> per_site) {
  return std::any_of(per_site.begin(), per_site.end(), [](const LabelCounts& c) {
    return c.labeled > 0 && 3 * c.patient >= c.labeled && 3 * c.patient <= 2 * c.labeled;
  });
}

inline bool is_known_condition(const std::optional<std::string>& c) {
  return c && !c->empty() && *c != "None" && *c != "Condition Unknown";
}

// First informative health condition among the author's sites, which must be
// given in creation order.
inline std::optional<std::string> assign_health_condition(std::span<const std::optional<std::string>> conditions) {
  for (const auto& c : conditions)
    if (is_known_condition(c)) return c;
  return std::nullopt;
}

inline int shared_health_condition(const std::optional<std::string>& a, const std::optional<std::string>& b) {
  return is_known_condition(a) && is_known_condition(b) && *a == *b ? 1 : 0;
}

inline constexpr std::size_t kMinGeoPosts = 10;

// Plurality state if the author has at least 10 posts with a state and the
// top share leads the runner-up by at least 0.20. Posts without a state are
// ignored.
inline std::optional<std::string> assign_state(std::span<const std::string> post_states) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : post_states) {
    if (s.empty()) continue;
    ++counts[s];
    ++total;
  }
  if (total < kMinGeoPosts) return std::nullopt;
  const std::string* top = nullptr;
  std::size_t first = 0, second = 0;
  for (const auto& [state, n] : counts) {
    if (n > first) {
      second = first;
      first = n;
      top = &state;
    } else if (n > second) {
      second = n;
    }
  }
  // (first - second) / total >= 1/5
  if (5 * (first - second) < total) return std::nullopt;
  return *top;
}

// Cohen's kappa for two raters over arbitrary comparable labels.
template <typename Label>
double cohens_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw ValidationError("cohens_kappa: sequences differ in length");
  if (a.size() < 2) throw ValidationError("cohens_kappa: need at least two items");
  std::map<Label, std::pair<double, double>> marginals;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marginals[a[i]].first += 1;
    marginals[b[i]].second += 1;
    if (a[i] == b[i]) agree += 1;
  }
  const double n = static_cast<double>(a.size());
  double expected = 0;
  for (const auto& [label, m] : marginals) expected += (m.first / n) * (m.second / n);
  const double observed = agree / n;
  if (expected >= 1.0) throw NumericalError("cohens_kappa: degenerate marginals (chance agreement is 1)");
  return (observed - expected) / (1.0 - expected);
}

// Kappa from a square agreement table, rows = rater A, columns = rater B.
inline double cohens_kappa_table(const std::vector<std::vector<double>>& table) {
  const std::size_t k = table.size();
  double n = 0, diag = 0;
  std::vector<double> rows(k, 0), cols(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (table[i].size() != k) throw ValidationError("cohens_kappa_table: table must be square");
    for (std::size_t j = 0; j < k; ++j) {
      n += table[i][j];
      rows[i] += table[i][j];
      cols[j] += table[i][j];
    }
    diag += table[i][i];
  }
  if (n < 2) throw ValidationError("cohens_kappa_table: need at least two items");
  double expected = 0;
  for (std::size_t i = 0; i < k; ++i) expected += (rows[i] / n) * (cols[i] / n);
  if (expected >= 1.0) throw NumericalError("cohens_kappa: degenerate marginals (chance agreement is 1)");
  return (diag / n - expected) / (1.0 - expected);
}

struct SiteInfo {
  std::optional<Timestamp> created_at;
  std::optional<std::string> health_condition;
};

struct GeoPost {
  AuthorId author;
  Timestamp timestamp = 0;
  std::string state;  // empty = unresolvable
};

struct ActivityFeatures {
  double update_count = 0;
  double update_frequency = 0;  // updates per 30.44-day month
  double days_since_most_recent_update = 0;
  double days_since_first_update = 0;
  bool is_multisite = false;
  bool is_mixedsite = false;
};

struct AuthorRecord {
  AuthorId id;
  std::optional<AuthorRole> role;  // absent without labeled updates
  bool is_shared_account = false;
  std::optional<std::string> health_condition;
  std::optional<std::string> state;
  std::vector<SiteId> sites;  // creation order
  std::optional<Timestamp> first_update_time;
};

class AuthorTable {
 public:
  AuthorTable() = default;

  // `sites` is indexed by SiteId and may be shorter than the site registry;
  // missing creation times fall back to the site's first update.
  AuthorTable(std::size_t n_authors, std::span<const UpdateEvent> updates, std::span<const SiteInfo> sites = {},
              std::span<const GeoPost> geo = {}) {
    for (const auto& u : updates) n_authors = std::max<std::size_t>(n_authors, u.author.value + 1);
    for (const auto& g : geo) n_authors = std::max<std::size_t>(n_authors, g.author.value + 1);
    records_.resize(n_authors);
    times_.resize(n_authors);
    multisite_since_.assign(n_authors, kNeverTime);
    mixedsite_since_.assign(n_authors, kNeverTime);
    for (std::size_t i = 0; i < n_authors; ++i) records_[i].id = AuthorId{static_cast<std::uint32_t>(i)};

    std::size_t n_sites = sites.size();
    for (const auto& u : updates) n_sites = std::max<std::size_t>(n_sites, u.site.value + 1);

    // Per (author, site): first update time and label counts.
    struct Cell {
      std::uint32_t author, site;
      Timestamp first;
      LabelCounts labels;
    };
    std::vector<std::tuple<std::uint32_t, std::uint32_t, Timestamp, RoleLabel>> rows;
    rows.reserve(updates.size());
    for (const auto& u : updates) {
      rows.emplace_back(u.author.value, u.site.value, u.timestamp, u.role_label);
      times_[u.author.value].push_back(u.timestamp);
    }
    for (auto& t : times_) std::sort(t.begin(), t.end());
    std::sort(rows.begin(), rows.end());

    std::vector<Cell> cells;
    for (std::size_t i = 0; i < rows.size();) {
      Cell c{std::get<0>(rows[i]), std::get<1>(rows[i]), std::get<2>(rows[i]), {}};
      std::size_t j = i;
      for (; j < rows.size() && std::get<0>(rows[j]) == c.author && std::get<1>(rows[j]) == c.site; ++j) {
        auto label = std::get<3>(rows[j]);
        if (label == RoleLabel::unlabeled) continue;
        ++c.labels.labeled;
        if (label == RoleLabel::P) ++c.labels.patient;
      }
      cells.push_back(c);
      i = j;
    }

    // Site first-update time and the time a second distinct author arrives.
    std::vector<std::vector<Timestamp>> site_author_firsts(n_sites);
    for (const auto& c : cells) site_author_firsts[c.site].push_back(c.first);
    std::vector<Timestamp> site_first(n_sites, kNeverTime), site_mixed(n_sites, kNeverTime);
    for (std::size_t s = 0; s < n_sites; ++s) {
      auto& v = site_author_firsts[s];
      std::sort(v.begin(), v.end());
      if (!v.empty()) site_first[s] = v[0];
      if (v.size() >= 2) site_mixed[s] = v[1];
    }

    for (std::size_t i = 0; i < cells.size();) {
      const auto author = cells[i].author;
      std::size_t j = i;
      LabelCounts total;
      std::vector<LabelCounts> per_site;
      std::vector<std::pair<Timestamp, std::uint32_t>> site_order;
      std::vector<Timestamp> author_site_firsts;
      for (; j < cells.size() && cells[j].author == author; ++j) {
        const auto& c = cells[j];
        total.patient += c.labels.patient;
        total.labeled += c.labels.labeled;
        per_site.push_back(c.labels);
        Timestamp created = c.site < sites.size() && sites[c.site].created_at ? *sites[c.site].created_at : site_first[c.site];
        site_order.emplace_back(created, c.site);
        author_site_firsts.push_back(c.first);
        mixedsite_since_[author] = std::min(mixedsite_since_[author], std::max(c.first, site_mixed[c.site]));
      }
      std::sort(author_site_firsts.begin(), author_site_firsts.end());
      if (author_site_firsts.size() >= 2) multisite_since_[author] = author_site_firsts[1];

      auto& rec = records_[author];
      if (total.labeled > 0) rec.role = aggregate_role(total.patient, total.labeled);
      rec.is_shared_account = shared_account(std::span<const LabelCounts>(per_site));
      std::sort(site_order.begin(), site_order.end());
      std::vector<std::optional<std::string>> conditions;
      for (auto [created, s] : site_order) {
        rec.sites.push_back(SiteId{s});
        conditions.push_back(s < sites.size() ? sites[s].health_condition : std::nullopt);
      }
      rec.health_condition = assign_health_condition(conditions);
      rec.first_update_time = times_[author].front();
      i = j;
    }

    std::vector<std::vector<std::string>> states(n_authors);
    for (const auto& g : geo) states[g.author.value].push_back(g.state);
    for (std::size_t a = 0; a < n_authors; ++a) records_[a].state = assign_state(states[a]);
  }

  std::size_t size() const { return records_.size(); }

  const AuthorRecord& record(AuthorId a) const {
    if (a.value >= records_.size()) throw ValidationError("unknown author id " + std::to_string(a.value));
    return records_[a.value];
  }

  std::span<const AuthorRecord> records() const { return records_; }

  void set_role(AuthorId a, std::optional<AuthorRole> role) { mutable_record(a).role = role; }
  void set_state(AuthorId a, std::optional<std::string> state) { mutable_record(a).state = std::move(state); }
  void set_health_condition(AuthorId a, std::optional<std::string> c) { mutable_record(a).health_condition = std::move(c); }

  // Activity as of time t, counting updates strictly before t.
  ActivityFeatures activity_features(AuthorId a, Timestamp t) const {
    ActivityFeatures f;
    if (a.value >= records_.size()) return f;
    const auto& times = times_[a.value];
    auto end = std::lower_bound(times.begin(), times.end(), t);
    const auto count = static_cast<std::size_t>(end - times.begin());
    if (count == 0) return f;
    const double day = static_cast<double>(kSecondsPerDay);
    const Timestamp first = times.front();
    const Timestamp last = *(end - 1);
    const double tenure_months =
        static_cast<double>(std::max<Timestamp>(t - first, kSecondsPerDay)) / (kDaysPerMonth * day);
    f.update_count = static_cast<double>(count);
    f.update_frequency = f.update_count / tenure_months;
    f.days_since_most_recent_update = static_cast<double>(t - last) / day;
    f.days_since_first_update = static_cast<double>(t - first) / day;
    f.is_multisite = multisite_since_[a.value] < t;
    f.is_mixedsite = mixedsite_since_[a.value] < t;
    return f;
  }

  void write_csv(std::ostream& out, const Registry& reg) const {
    out << "author_id,role,is_shared,health_condition,state,first_update_time\n";
    for (const auto& r : records_) {
      out << csv::quote(reg.authors.name(r.id)) << ',' << (r.role ? to_string(*r.role) : "") << ','
          << (r.is_shared_account ? 1 : 0) << ',' << csv::quote(r.health_condition.value_or("")) << ','
          << csv::quote(r.state.value_or("")) << ',';
      if (r.first_update_time) out << *r.first_update_time;
      out << '\n';
    }
  }

 private:
  static constexpr Timestamp kNeverTime = std::numeric_limits<Timestamp>::max();

  AuthorRecord& mutable_record(AuthorId a) {
    if (a.value >= records_.size()) throw ValidationError("unknown author id " + std::to_string(a.value));
    return records_[a.value];
  }

  std::vector<AuthorRecord> records_;
  std::vector<std::vector<Timestamp>> times_;
  std::vector<Timestamp> multisite_since_;
  std::vector<Timestamp> mixedsite_since_;
};

inline std::vector<GeoPost> load_geo_posts(std::istream& in, Registry& reg) {
  std::vector<GeoPost> out;
  static const std::vector<std::string> cols{"author_id", "timestamp", "state"};
  detail::for_each_row(in, Format::csv, cols, [&](std::size_t line, const auto& f) {
    if (f[0].empty()) throw ValidationError(detail::at_line(line, "author_id", "empty"));
    out.push_back({reg.authors.intern(f[0]), detail::parse_timestamp(f[1], line, "timestamp"), std::string(f[2])});
  });
  return out;
}

// Site metadata CSV: site_id,created_at,health_condition (both optional).
inline std::vector<SiteInfo> load_sites(std::istream& in, Registry& reg) {
  std::vector<SiteInfo> out;
  static const std::vector<std::string> cols{"site_id", "created_at", "health_condition"};
  detail::for_each_row(in, Format::csv, cols, [&](std::size_t line, const auto& f) {
    if (f[0].empty()) throw ValidationError(detail::at_line(line, "site_id", "empty"));
    auto s = reg.sites.intern(f[0]);
    if (s.value >= out.size()) out.resize(s.value + 1);
    if (!f[1].empty()) out[s.value].created_at = detail::parse_timestamp(f[1], line, "created_at");
    if (!f[2].empty()) out[s.value].health_condition = std::string(f[2]);
  });
  return out;
}

}  // namespace netchoice
