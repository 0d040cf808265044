// Acceptance checks. One line per criterion; exit status 1 if any fails.

#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <fcntl.h>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "netchoice/authors.hpp"
#include "netchoice/choices.hpp"
#include "netchoice/cli.hpp"
#include "netchoice/estimators.hpp"
#include "netchoice/initiations.hpp"
#include "netchoice/labelshift.hpp"
#include "support.hpp"

extern char** environ;

using namespace netchoice;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double naive_loglik(const Eigen::VectorXd& b, const std::vector<ChoiceInstance>& v) {
  double ll = 0;
  for (const auto& c : v) {
    double denom = 0;
    for (Eigen::Index j = 0; j < c.X.rows(); ++j) denom += std::exp(c.X.row(j).dot(b));
    ll += c.X.row(static_cast<Eigen::Index>(c.chosen)).dot(b) - std::log(denom);
  }
  return ll;
}

double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) d = std::max({d, (i + 1.0) / n - p[i], p[i] - static_cast<double>(i) / n});
  return d;
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 0.7);
  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto data = testing_support::random_instances(1000 + s, 40, 5);
    Eigen::VectorXd b(5);
    for (auto& x : b) x = z(rng);
    const auto g = mnl_gradient(b, data);
    for (Eigen::Index k = 0; k < 5; ++k) {
      const double h = 1e-5;
      Eigen::VectorXd up = b, dn = b;
      up(k) += h;
      dn(k) -= h;
      const double fd = (naive_loglik(up, data) - naive_loglik(dn, data)) / (2 * h);
      worst = std::max(worst, std::fabs(fd - g(k)) / std::max(std::fabs(fd), 1.0));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 5, "max relative error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome closed_form_mle() {
  auto fit = mnl_fit(testing_support::closed_form_fixture());
  const double err = std::fabs(fit.coefficients(0) - std::log(3.0));
  return {fit.converged && err < 1e-6 && fit.iterations <= 10,
          "beta " + fmt(fit.coefficients(0)) + ", |error| " + fmt(err) + ", " + std::to_string(fit.iterations) +
              " iterations"};
}

Outcome coefficient_recovery() {
  const auto t0 = Clock::now();
  SynthConfig cfg;
  cfg.beta_true = {1.5, -0.75};
  cfg.features = {Feature::is_friend_of_friend, Feature::target_indegree_log};
  cfg.n_choices = 5000;
  cfg.candidate_pool_size = 25;
  cfg.seed = 20240601;
  auto data = synth_generate(cfg);
  auto split = temporal_split(std::move(data.instances), 0.8);
  auto fit = mnl_fit(split.train);
  bool within = fit.converged;
  std::string detail;
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double z = std::fabs(fit.coefficients(k) - cfg.beta_true[static_cast<std::size_t>(k)]) / fit.std_errors(k);
    within = within && z <= 3;
    detail += "beta" + std::to_string(k) + " " + fmt(fit.coefficients(k)) + " (" + fmt(z) + " SE), ";
  }
  const double acc = mnl_accuracy(fit, split.test);
  const double secs = seconds_since(t0);
  detail += "held-out accuracy " + fmt(acc) + " on " + std::to_string(split.test.size()) + ", " + fmt(secs) + " s";
  return {within && acc > 1.0 / 25.0 && secs < 60, detail};
}

Outcome component_oracle() {
  std::size_t mismatches = 0, checks = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<DirectedInteraction> stream;
    while (stream.size() < 1000) {
      const auto s = static_cast<std::uint32_t>(rng() % 200), t = static_cast<std::uint32_t>(rng() % 200);
      if (s != t) stream.push_back(testing_support::di(s, t, static_cast<Timestamp>(stream.size() + 1)));
    }
    auto g = TemporalGraph::build(stream);
    const auto inits = classified_initiations(g);
    std::map<std::pair<std::uint32_t, std::uint32_t>, InitiationType> classified;
    for (const auto& i : inits) classified[{i.initiator.value, i.receiver.value}] = i.itype;

    auto walk = TemporalGraph::build(stream);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> before;
    std::vector<char> active(200, 0);
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& e : stream) {
      walk.advance_to(e.timestamp);
      const auto label = testing_support::bfs_components(200, before);
      const auto a = e.source.value, b = e.target.value;
      mismatches += walk.same_wcc(e.source, e.target) != (label[a] == label[b]);
      std::size_t n_active = 0;
      for (char x : active) n_active += x;
      if (n_active > 0) {
        const double share = static_cast<double>(testing_support::largest_active_component(label, active)) /
                             static_cast<double>(n_active);
        mismatches += walk.largest_wcc_share() != share;
      }
      if (seen.insert({a, b}).second) {
        std::map<std::uint32_t, std::size_t> size;
        for (std::uint32_t v = 0; v < 200; ++v)
          if (active[v]) ++size[label[v]];
        const bool a_iso = !active[a] || size[label[a]] == 1;
        const bool b_iso = !active[b] || size[label[b]] == 1;
        InitiationType expect = a_iso && b_iso   ? InitiationType::JoiningIsolates
                                : a_iso || b_iso ? InitiationType::JoiningComponent
                                : label[a] == label[b] ? InitiationType::IntraComponent
                                                       : InitiationType::BridgingComponent;
        mismatches += classified.at({a, b}) != expect;
      }
      checks += 3;
      before.emplace_back(a, b);
      active[a] = active[b] = 1;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checks) + " checks"};
}

Outcome bbse_checks() {
  ConfusionJoint c{(Eigen::Matrix2d() << 0.4, 0.1, 0.1, 0.4).finished(), 100};
  auto r = bbse(c, Eigen::Vector2d(0.35, 0.65));
  const double hand = std::max({std::fabs(r.weights(0) - 0.5), std::fabs(r.weights(1) - 1.5),
                                std::fabs(r.corrected_priors(0) - 0.25), std::fabs(r.corrected_priors(1) - 0.75)});
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u;
  auto draw = [&](double p_first, std::vector<int>& pred, std::vector<int>& lab) {
    for (int i = 0; i < 10000; ++i) {
      const int y = u(rng) < p_first ? 1 : 2;
      pred.push_back(u(rng) < 0.9 ? y : 3 - y);
      lab.push_back(y);
    }
  };
  std::vector<int> sp, sl, tp, tl;
  draw(0.5, sp, sl);
  draw(0.2, tp, tl);
  auto shift = bbse(confusion_from_holdout(sp, sl, 2), prediction_marginal(tp, 2));
  const double err = std::fabs(shift.corrected_priors(0) - 0.2);
  return {hand < 1e-12 && err <= 0.03,
          "hand case max error " + fmt(hand) + "; synthetic target prior " + fmt(shift.corrected_priors(0)) + "/" +
              fmt(shift.corrected_priors(1))};
}

Outcome inference_checks() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  const Eigen::Vector3d beta(-0.4, 0.9, -1.3);
  Eigen::MatrixXd X(20000, 3);
  Eigen::VectorXd y(20000);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = 1;
    X(i, 1) = z(rng);
    X(i, 2) = z(rng);
    y(i) = u(rng) < 1 / (1 + std::exp(-X.row(i).dot(beta))) ? 1 : 0;
  }
  auto logit = logistic_fit(X, y);
  double worst_z = 0;
  for (Eigen::Index k = 0; k < 3; ++k)
    worst_z = std::max(worst_z, std::fabs(logit.coefficients(k) - beta(k)) / logit.std_errors(k));

  Eigen::VectorXd yo(20000);
  for (Eigen::Index i = 0; i < X.rows(); ++i) yo(i) = 0.5 + X(i, 1) - 0.25 * X(i, 2) + z(rng);
  auto ols = ols_fit(X, yo);
  const double ortho = (X.transpose() * (yo - X * ols.coefficients)).cwiseAbs().maxCoeff() / std::sqrt(20000.0);

  std::vector<double> p;
  for (int rep = 0; rep < 500; ++rep) {
    Eigen::MatrixXd W(80, 3);
    Eigen::VectorXd v(80);
    for (int i = 0; i < 80; ++i) {
      W(i, 0) = 1;
      W(i, 1) = z(rng);
      W(i, 2) = z(rng);
      v(i) = 1 + 0.5 * W(i, 1) + z(rng);
    }
    p.push_back(f_test_nested(ols_fit(W, v, {"c", "a", "noise"}), ols_fit(W.leftCols(2), v, {"c", "a"})).p_value);
  }
  const double d = ks_uniform(p), crit = 1.628 / std::sqrt(500.0);
  return {logit.converged && worst_z <= 3 && ortho < 1e-8 && d < crit,
          "logit max |z| " + fmt(worst_z) + "; OLS max |x'r|/sqrt(n) " + fmt(ortho) + "; KS D " + fmt(d) +
              " (1% critical " + fmt(crit) + ")"};
}

Outcome kappa_checks() {
  std::vector<std::string> a{"x", "y", "x", "z"};
  const double same = cohens_kappa<std::string>(a, a);
  const double table = cohens_kappa_table({{20, 5}, {10, 15}});
  bool degenerate = false;
  try {
    std::vector<std::string> c{"x", "x", "x"};
    cohens_kappa<std::string>(c, c);
  } catch (const NumericalError&) {
    degenerate = true;
  }
  return {same == 1.0 && std::fabs(table - 0.4) <= 1e-12 && degenerate,
          "identical " + fmt(same) + ", table " + fmt(table) + ", degenerate marginals " +
              (degenerate ? "rejected" : "accepted")};
}

Outcome rule_engines() {
  auto posts = [](std::initializer_list<std::pair<const char*, int>> counts) {
    std::vector<std::string> v;
    for (auto [s, n] : counts) v.insert(v.end(), static_cast<std::size_t>(n), s);
    return v;
  };
  int failed = 0;
  auto check = [&](bool ok) { failed += !ok; };
  check(assign_state(posts({{"MN", 6}, {"CA", 4}})) == "MN");             // margin exactly 0.20
  check(assign_state(posts({{"MN", 5}, {"CA", 3}, {"TX", 2}})) == "MN");  // margin exactly 0.20
  check(!assign_state(posts({{"MN", 5}, {"CA", 4}, {"TX", 1}})));        // 0.10
  check(assign_state(posts({{"MN", 6}, {"CA", 3}, {"TX", 3}})) == "MN");
  check(!assign_state(posts({{"MN", 9}})));
  check(aggregate_role(1, 3) == AuthorRole::Mixed);
  check(aggregate_role(2, 3) == AuthorRole::Mixed);
  check(aggregate_role(3, 9) == AuthorRole::Mixed);
  check(aggregate_role(6, 9) == AuthorRole::Mixed);
  check(aggregate_role(2, 9) == AuthorRole::CG);
  check(aggregate_role(7, 9) == AuthorRole::P);
  check(shared_account(std::vector<double>{1.0 / 3.0}));
  check(shared_account(std::vector<double>{0.0, 0.5}));
  check(!shared_account(std::vector<double>{0.0, 1.0}));
  return {failed == 0, std::to_string(14 - failed) + " of 14 boundary fixtures"};
}

// Runs the CLI as a child so its peak RSS is isolated from this process.
int spawn_cli(const std::vector<std::string>& args, const fs::path& log) {
  std::vector<char*> argv;
  std::vector<std::string> owned{NETCHOICE_CLI};
  owned.insert(owned.end(), args.begin(), args.end());
  for (auto& a : owned) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, 1, 2);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return -1;
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome performance() {
  const fs::path work = fs::path(ACCEPTANCE_WORK_DIR) / "scale";
  fs::remove_all(work);
  const auto g0 = Clock::now();
  auto logs = testing_support::write_site_logs(work / "logs", 9, 200000, 10'000'000, 900 * kSecondsPerDay);
  const double gen = seconds_since(g0);
  const auto t0 = Clock::now();
  const int code = spawn_cli({"network", "--interactions", logs.interactions.string(), "--updates", logs.updates.string(),
                              "--out-dir", (work / "out").string()},
                             work / "network.log");
  const double secs = seconds_since(t0);
  rusage usage{};
  getrusage(RUSAGE_CHILDREN, &usage);
  const double peak_gb = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
  std::string throughput;
  {
    std::ifstream in(work / "network.log");
    for (std::string line; std::getline(in, line);)
      if (line.rfind("ingest+project+build", 0) == 0) throughput = line;
  }
  fs::remove_all(work);
  return {code == 0 && secs < 300 && peak_gb < 4,
          "10M events in " + fmt(secs) + " s, peak RSS " + fmt(peak_gb) + " GB (exit " + std::to_string(code) +
              ", fixture written in " + fmt(gen) + " s); CLI: " + throughput};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "netchoice");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
}

int full_pipeline(const testing_support::LogFiles& logs, const fs::path& out, const std::string& threads) {
  const std::vector<std::string> common{"--interactions", logs.interactions.string(), "--updates", logs.updates.string(),
                                        "--sites", logs.sites.string(), "--geo", logs.geo.string(), "--include-state",
                                        "--seed", "11", "--threads", threads, "--out-dir", out.string()};
  for (std::string cmd : {"ingest", "project", "network", "initiations", "authors", "features"}) {
    auto args = common;
    args.insert(args.begin(), cmd);
    if (int c = run_cli(args)) return c;
  }
  if (int c = run_cli({"fit-mnl", "--train", (out / "train.jsonl").string(), "--test", (out / "test.jsonl").string(),
                       "--threads", threads, "--out-dir", out.string()}))
    return c;
  if (int c = run_cli({"synth", "--seed", "11", "--synth-choices", "2000", "--out-dir", out.string()})) return c;
  if (int c = run_cli({"fit-mnl", "--train", (out / "synth_train.jsonl").string(), "--threads", threads, "--out-dir",
                       (out / "synth").string()}))
    return c;
  return run_cli({"report", "--initiations", (out / "initiations.csv").string(), "--fits",
                  (out / "model_mnl.json").string(), "--authors", (out / "authors.csv").string(), "--out-dir",
                  out.string()});
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

Outcome determinism() {
  const fs::path work = fs::path(ACCEPTANCE_WORK_DIR) / "determinism";
  fs::remove_all(work);
  auto logs = testing_support::write_site_logs(work / "logs", 3, 150, 8000);
  if (int c = full_pipeline(logs, work / "run", "1")) return {false, "first run exited " + std::to_string(c)};
  auto first = snapshot(work / "run");
  if (int c = full_pipeline(logs, work / "run", "8")) return {false, "second run exited " + std::to_string(c)};
  auto second = snapshot(work / "run");
  std::size_t differing = 0;
  for (const auto& [name, body] : first) differing += second[name] != body;
  fs::remove_all(work);
  return {differing == 0 && first.size() == second.size() && first.size() >= 15,
          std::to_string(first.size()) + " files compared across --threads 1 and 8, " + std::to_string(differing) +
              " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"closed-form MLE", closed_form_mle},
      {"coefficient recovery", coefficient_recovery},
      {"component oracle", component_oracle},
      {"label shift", bbse_checks},
      {"logistic/OLS inference", inference_checks},
      {"kappa", kappa_checks},
      {"rule engines", rule_engines},
      {"performance", performance},
      {"determinism", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
