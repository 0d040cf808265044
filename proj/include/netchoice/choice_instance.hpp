#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netchoice/common.hpp"

namespace netchoice {

// One observed choice: the chooser picked alternatives[chosen] out of the
// listed alternatives. Row k of X holds the features of alternative k.
struct ChoiceInstance {
  std::string chooser;
  Timestamp time = 0;
  std::size_t chosen = 0;
  std::vector<std::string> alternatives;
  Eigen::MatrixXd X;
  std::vector<std::string> feature_names;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
};

inline void validate(const ChoiceInstance& c) {
  if (c.X.rows() < 2) throw ValidationError("choice instance needs at least two alternatives");
  if (c.chosen >= c.size()) throw ValidationError("chosen index out of range");
  if (!c.alternatives.empty() && c.alternatives.size() != c.size())
    throw ValidationError("alternatives and feature rows differ in count");
  if (!c.feature_names.empty() && c.feature_names.size() != c.dim())
    throw ValidationError("feature_names and feature columns differ in count");
  if (!c.X.allFinite()) throw ValidationError("non-finite feature value");
}

inline nlohmann::json to_json(const ChoiceInstance& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < c.X.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < c.X.cols(); ++k) row.push_back(c.X(r, k));
    rows.push_back(std::move(row));
  }
  return {{"chooser", c.chooser},   {"time", c.time}, {"alternatives", c.alternatives},
          {"chosen", c.chosen},     {"X", rows},      {"feature_names", c.feature_names}};
}

inline ChoiceInstance choice_from_json(const nlohmann::json& j) {
  ChoiceInstance c;
  try {
    c.chooser = j.value("chooser", std::string());
    c.time = j.value("time", Timestamp{0});
    c.chosen = j.at("chosen").get<std::size_t>();
    if (j.contains("alternatives"))
      for (const auto& a : j.at("alternatives")) c.alternatives.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    if (j.contains("feature_names")) c.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& rows = j.at("X");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
    c.X.resize(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != p) throw ValidationError("ragged feature matrix");
      for (Eigen::Index k = 0; k < p; ++k) c.X(r, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed choice instance: ") + e.what());
  }
  validate(c);
  return c;
}

inline void write_choices_jsonl(std::ostream& out, const std::vector<ChoiceInstance>& instances) {
  for (const auto& c : instances) out << to_json(c).dump() << '\n';
}

inline std::vector<ChoiceInstance> read_choices_jsonl(std::istream& in) {
  std::vector<ChoiceInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      out.push_back(choice_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace netchoice
