#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedqubo/selection.hpp"

namespace fedqubo {

// One federated round as recorded by the simulator.
struct RoundRecord {
  int round = 0;
  std::vector<int> selected;
  std::string winning_strategy = "n/a";
  double accuracy = 0.0;
  double loss = 0.0;
  double per_round_privacy = 0.0;  // 1 - |selected| / n
  double gradient_variance = 0.0;
};

struct ParticipationSummary {
  std::vector<long> counts;
  double never_selected_fraction = 0.0;
  double mean_participation_rate = 0.0;
  double cumulative_privacy = 0.0;  // 1 - mean participation rate
};

// 1 - selected_size / n. Takes a real size so averaged selection counts can
// be scored directly.
double per_round_privacy(double selected_size, int n);

ParticipationSummary participation_summary(const std::vector<RoundRecord>& history, int n);

// Variance of the selected subset of updates (same definition the strategy
// scoring uses).
double gradient_variance(const std::vector<ClientUpdate>& updates,
                         const std::vector<int>& selected);

// client x alpha matrix of selection counts, ready for external plotting.
struct HeatmapTable {
  std::vector<double> alphas;
  std::vector<std::vector<long>> counts;  // counts[client][alpha_index]
};

HeatmapTable export_heatmap(const std::map<double, std::vector<RoundRecord>>& histories, int n);

}  // namespace fedqubo
