#pragma once

// Descriptive report over classified initiations plus model tables.

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netchoice/authors.hpp"
#include "netchoice/estimators.hpp"
#include "netchoice/initiations.hpp"

namespace netchoice {

struct NamedFit {
  std::string name;
  FitResult fit;
};

struct Report {
  nlohmann::json json;
  std::string text;
};

// `states` is indexed by AuthorId; when no initiation has both endpoints
// assigned, the same-state section is marked unavailable.
inline Report emit_report(std::span<const Initiation> initiations, std::span<const NamedFit> fits,
                          std::span<const std::optional<std::string>> states = {}) {
  Report r;
  WindowStats all;
  for (const auto& i : initiations) all.add(i);

  std::size_t both_assigned = 0, same_state = 0;
  for (const auto& i : initiations) {
    auto a = i.initiator.value < states.size() ? states[i.initiator.value] : std::nullopt;
    auto b = i.receiver.value < states.size() ? states[i.receiver.value] : std::nullopt;
    if (!a || !b) continue;
    ++both_assigned;
    if (*a == *b) ++same_state;
  }

  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json types = nlohmann::json::object();
  for (std::size_t k = 0; k < kInitiationTypeCount; ++k) {
    auto t = static_cast<InitiationType>(k);
    types[std::string(to_string(t))] = {{"count", all.counts[k]}, {"share", opt(all.share(t))}};
  }
  nlohmann::json state_section;
  if (both_assigned == 0) {
    state_section = {{"available", false}};
  } else {
    state_section = {{"available", true},
                     {"pairs_with_both_assigned", both_assigned},
                     {"same_state", same_state},
                     {"share", static_cast<double>(same_state) / static_cast<double>(both_assigned)}};
  }
  nlohmann::json models = nlohmann::json::object();
  for (const auto& f : fits) models[f.name] = to_json(f.fit);

  r.json = {{"initiations", all.total},
            {"types", types},
            {"reciprocal", {{"count", all.reciprocal}, {"share", opt(all.reciprocal_share())}}},
            {"bridging_plus_isolates_share", opt(all.bridging_plus_isolates_share())},
            {"joining_component_isolate_initiated_share", opt(all.isolate_initiator_share())},
            {"same_state", state_section},
            {"models", models}};

  std::ostringstream os;
  auto pct = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * *v << "%";
    return s.str();
  };
  os << "Initiations: " << all.total << '\n';
  for (std::size_t k = 0; k < kInitiationTypeCount; ++k) {
    auto t = static_cast<InitiationType>(k);
    os << "  " << std::left << std::setw(20) << to_string(t) << std::right << std::setw(10) << all.counts[k] << "  "
       << pct(all.share(t)) << '\n';
  }
  os << "Reciprocal initiations: " << all.reciprocal << " (" << pct(all.reciprocal_share()) << ")\n";
  os << "Bridging Component + Joining Isolates: " << pct(all.bridging_plus_isolates_share()) << '\n';
  os << "Joining Component initiated by the unconnected author: " << pct(all.isolate_initiator_share()) << '\n';
  if (both_assigned == 0)
    os << "Same US state: unavailable (no initiations with both state assignments)\n";
  else
    os << "Same US state: " << same_state << " of " << both_assigned << " ("
       << pct(static_cast<double>(same_state) / static_cast<double>(both_assigned)) << ")\n";
  for (const auto& f : fits) os << "\nModel: " << f.name << '\n' << coefficient_table(f.fit);
  r.text = os.str();
  return r;
}

}  // namespace netchoice
