#include "fedqubo/metrics.hpp"

#include <stdexcept>
#include <string>
#include <unordered_map>

namespace fedqubo {

double per_round_privacy(double selected_size, int n) {
  if (n < 1) throw std::invalid_argument("per_round_privacy: n must be >= 1");
  if (selected_size < 0.0 || selected_size > n) {
    throw std::invalid_argument("per_round_privacy: selected size " +
                                std::to_string(selected_size) + " outside [0, " +
                                std::to_string(n) + "]");
  }
  return 1.0 - selected_size / n;
}

ParticipationSummary participation_summary(const std::vector<RoundRecord>& history, int n) {
  if (history.empty()) throw std::invalid_argument("participation_summary: empty history");
  if (n < 1) throw std::invalid_argument("participation_summary: n must be >= 1");

  ParticipationSummary out;
  out.counts.assign(n, 0);
  long total = 0;
  for (const auto& rec : history) {
    for (int id : rec.selected) {
      if (id < 0 || id >= n) {
        throw std::invalid_argument("participation_summary: client id " + std::to_string(id) +
                                    " outside pool of size " + std::to_string(n));
      }
      out.counts[id] += 1;
      total += 1;
    }
  }
  long never = 0;
  for (long c : out.counts) {
    if (c == 0) never += 1;
  }
  out.never_selected_fraction = static_cast<double>(never) / n;
  out.mean_participation_rate =
      static_cast<double>(total) / (static_cast<double>(n) * history.size());
  out.cumulative_privacy = 1.0 - out.mean_participation_rate;
  return out;
}

double gradient_variance(const std::vector<ClientUpdate>& updates,
                         const std::vector<int>& selected) {
  if (selected.empty()) throw std::invalid_argument("gradient_variance: empty selection");
  std::unordered_map<int, const ClientUpdate*> by_id;
  for (const auto& u : updates) by_id.emplace(u.client_id, &u);

  std::vector<ClientUpdate> chosen;
  chosen.reserve(selected.size());
  for (int id : selected) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("gradient_variance: unknown client id " + std::to_string(id));
    }
    chosen.push_back(*it->second);
  }
  return update_variance(chosen);
}

HeatmapTable export_heatmap(const std::map<double, std::vector<RoundRecord>>& histories, int n) {
  HeatmapTable table;
  table.counts.assign(n, std::vector<long>(histories.size(), 0));
  int col = 0;
  for (const auto& [alpha, history] : histories) {
    table.alphas.push_back(alpha);
    for (const auto& rec : history) {
      for (int id : rec.selected) {
        if (id >= 0 && id < n) table.counts[id][col] += 1;
      }
    }
    ++col;
  }
  return table;
}

}  // namespace fedqubo
