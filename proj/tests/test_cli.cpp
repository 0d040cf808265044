#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "netchoice/cli.hpp"
#include "support.hpp"

using namespace netchoice;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "netchoice");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::path(::testing::TempDir()) / ("netchoice_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

// Runs every data stage in order into `out`; returns the first nonzero exit.
int pipeline(const testing_support::LogFiles& logs, const fs::path& out, const std::string& threads) {
  const std::vector<std::string> common{"--interactions", logs.interactions.string(), "--updates", logs.updates.string(),
                                        "--sites", logs.sites.string(), "--geo", logs.geo.string(), "--include-state",
                                        "--seed", "7", "--negatives", "5", "--threads", threads, "--out-dir",
                                        out.string()};
  for (std::string cmd : {"ingest", "project", "network", "initiations", "authors", "features"}) {
    auto args = common;
    args.insert(args.begin(), cmd);
    auto r = run(args);
    if (r.code != 0) {
      ADD_FAILURE() << cmd << ": " << r.err;
      return r.code;
    }
  }
  auto fit = run({"fit-mnl", "--train", (out / "train.jsonl").string(), "--test", (out / "test.jsonl").string(),
                  "--threads", threads, "--out-dir", out.string()});
  if (fit.code != 0) {
    ADD_FAILURE() << "fit-mnl: " << fit.err;
    return fit.code;
  }
  auto report = run({"report", "--initiations", (out / "initiations.csv").string(), "--fits",
                     (out / "model_mnl.json").string(), "--authors", (out / "authors.csv").string(), "--out-dir",
                     out.string()});
  if (report.code != 0) ADD_FAILURE() << "report: " << report.err;
  return report.code;
}

}  // namespace

TEST(Cli, FitMnlOnClosedFormFixture) {
  auto dir = scratch("closed_form");
  {
    std::ofstream f(dir / "train.jsonl");
    write_choices_jsonl(f, testing_support::closed_form_fixture());
  }
  auto r = run({"fit-mnl", "--train", (dir / "train.jsonl").string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = read_json(dir / "model_mnl.json");
  EXPECT_NEAR(j["coefficients"][0].get<double>(), std::log(3.0), 1e-6);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_TRUE(j.contains("config_hash"));
  EXPECT_EQ(slurp(dir / "model_mnl.txt").rfind("# config_hash=", 0), 0u);
}

TEST(Cli, ReportOnEmptyInitiations) {
  auto dir = scratch("empty_report");
  {
    std::ofstream f(dir / "initiations.csv");
    write_initiations_csv(f, {}, Registry{});
  }
  auto r = run({"report", "--initiations", (dir / "initiations.csv").string(), "--out-dir", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_NE(slurp(dir / "report.txt").find("unavailable"), std::string::npos);
}

TEST(Cli, ReportStarsFollowThresholds) {
  auto dir = scratch("stars");
  FitResult f;
  f.model = ModelKind::logit;
  f.feature_names = {"weak", "one", "two", "three"};
  f.coefficients = Eigen::Vector4d(1, 1, 1, 1);
  f.std_errors = Eigen::Vector4d(1.0, 1 / 2.2, 1 / 2.9, 1 / 4.0);  // p = .317, .028, .0037, .00006
  f.n_obs = 100;
  f.n_params = 4;
  f.loglik = -50;
  write_file(dir / "m.json", to_json(f).dump());
  {
    std::ofstream i(dir / "initiations.csv");
    write_initiations_csv(i, {}, Registry{});
  }
  auto r = run({"report", "--initiations", (dir / "initiations.csv").string(), "--fits", (dir / "m.json").string(),
                "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto text = slurp(dir / "report.txt");
  auto line = [&](const std::string& name) {
    auto at = text.find("\n" + name + " ");
    return text.substr(at + 1, text.find('\n', at + 1) - at - 1);
  };
  EXPECT_EQ(line("weak").find('*'), std::string::npos);
  EXPECT_NE(line("one").find("1.0000*"), std::string::npos);
  EXPECT_NE(line("two").find("1.0000**"), std::string::npos);
  EXPECT_NE(line("three").find("1.0000***"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch("codes");
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"ingest", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"ingest", "--interactions", (dir / "missing.csv").string(), "--updates", (dir / "m2.csv").string(),
                 "--out-dir", dir.string()})
                .code,
            cli::kExitValidation);
  EXPECT_EQ(run({"kappa", "--labels", (dir / "x.csv").string(), "--train-frac", "1.5"}).code, cli::kExitValidation);
  write_file(dir / "hold.csv", "prediction,label\n1,1\n1,2\n1,1\n1,2\n");
  write_file(dir / "target.csv", "prediction\n1\n1\n");
  EXPECT_EQ(run({"bbse", "--holdout", (dir / "hold.csv").string(), "--target", (dir / "target.csv").string(),
                 "--out-dir", dir.string()})
                .code,
            cli::kExitNumerical);
}

TEST(Cli, BbseAndKappaFiles) {
  auto dir = scratch("bbse");
  // 40% (1,1), 10% (1,2), 10% (2,1), 40% (2,2)
  std::string hold = "prediction,label\n";
  for (int i = 0; i < 4; ++i) hold += "1,1\n2,2\n";
  hold += "1,2\n2,1\n";
  write_file(dir / "hold.csv", hold);
  write_file(dir / "mu.json", "{\"marginal\": [0.35, 0.65]}");
  write_file(dir / "folds.csv", "estimate\n0.2\n0.3\n");
  auto r = run({"bbse", "--holdout", (dir / "hold.csv").string(), "--target", (dir / "mu.json").string(), "--folds",
                (dir / "folds.csv").string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = read_json(dir / "bbse.json");
  EXPECT_NEAR(j["corrected_priors"][0].get<double>(), 0.25, 1e-12);
  EXPECT_NEAR(j["folds"]["se"].get<double>(), 0.05, 1e-12);

  std::string labels = "rater_a,rater_b\n";
  for (int i = 0; i < 20; ++i) labels += "x,x\n";
  for (int i = 0; i < 5; ++i) labels += "x,y\n";
  for (int i = 0; i < 10; ++i) labels += "y,x\n";
  for (int i = 0; i < 15; ++i) labels += "y,y\n";
  write_file(dir / "labels.csv", labels);
  ASSERT_EQ(run({"kappa", "--labels", (dir / "labels.csv").string(), "--out-dir", dir.string()}).code, 0);
  EXPECT_NEAR(read_json(dir / "kappa.json")["kappa"].get<double>(), 0.4, 1e-12);
}

TEST(Cli, FitOlsWithNestedTest) {
  auto dir = scratch("ols");
  std::string data = "y,x,z\n";
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    double x = n(rng), z = n(rng);
    data += std::to_string(1 + 2 * x + n(rng)) + "," + std::to_string(x) + "," + std::to_string(z) + "\n";
  }
  write_file(dir / "d.csv", data);
  auto r = run({"fit-ols", "--data", (dir / "d.csv").string(), "--outcome", "y", "--terms", "x,z,x:z", "--reduced", "x",
                "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = read_json(dir / "model_ols.json");
  EXPECT_EQ(j["feature_names"].size(), 4u);
  EXPECT_EQ(j["f_test"]["df1"].get<double>(), 2.0);
}

TEST(Cli, SynthThenFit) {
  auto dir = scratch("synth");
  auto s = run({"synth", "--synth-authors", "200", "--synth-choices", "800", "--negatives", "9", "--seed", "3",
                "--out-dir", dir.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  std::ifstream in(dir / "synth_choices.jsonl");
  auto all = read_choices_jsonl(in);
  ASSERT_EQ(all.size(), 800u);
  for (const auto& c : all) EXPECT_LE(c.size(), 10u);
  auto f = run({"fit-mnl", "--train", (dir / "synth_train.jsonl").string(), "--out-dir", dir.string()});
  EXPECT_EQ(f.code, 0) << f.err;
}

TEST(Cli, PipelineIsByteIdenticalAcrossRunsAndThreads) {
  auto base = scratch("pipeline");
  auto logs = testing_support::write_site_logs(base / "logs", 11, 80, 3000);
  ASSERT_EQ(pipeline(logs, base / "run", "1"), 0);
  std::map<std::string, std::string> first;
  for (const auto& entry : fs::directory_iterator(base / "run")) first[entry.path().filename().string()] = slurp(entry.path());
  ASSERT_EQ(pipeline(logs, base / "run", "4"), 0);
  EXPECT_GE(first.size(), 15u);
  for (const auto& [name, body] : first) EXPECT_EQ(body, slurp(base / "run" / name)) << name;
  auto report = read_json(base / "run" / "report.json");
  EXPECT_TRUE(report["same_state"]["available"].get<bool>());
}

TEST(Cli, ConfigFileMatchesFlags) {
  auto base = scratch("config");
  auto logs = testing_support::write_site_logs(base / "logs", 12, 30, 500);
  write_file(base / "run.ini", "interactions=" + logs.interactions.string() + "\nupdates=" + logs.updates.string() +
                                   "\nseed=4\n");
  auto a = run({"ingest", "--config", (base / "run.ini").string(), "--out-dir", (base / "a").string()});
  auto b = run({"ingest", "--interactions", logs.interactions.string(), "--updates", logs.updates.string(), "--seed", "4",
                "--out-dir", (base / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(base / "a" / "ingest_summary.json"), slurp(base / "b" / "ingest_summary.json"));
}
