#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedqubo/qubo.hpp"

namespace fedqubo {

// One client's contribution for the current round: the flattened parameter
// delta and the local sample count.
struct ClientUpdate {
  int client_id = 0;
  std::vector<double> delta;
  int num_samples = 0;
};

enum class DatasetProfile { mnist, cinic10 };

DatasetProfile parse_dataset_profile(const std::string& name);
std::string to_string(DatasetProfile profile);

// One row of the strategy bank: redundancy weight, cardinality penalty and
// the two per-strategy switches.
struct StrategyConfig {
  std::string name;
  double lambda_r_s = 0.0;
  double lambda_c = 1.0;
  bool anti_clustering = false;
  bool magnitude_boost = false;
};

struct SelectionParams {
  double beta_r = 3.0;
  int k = 10;
  double tau = 0.98;
  double gamma = 0.3;
  double epsilon = 1e-8;
  int max_selections = 1000000;
  bool fairness_mode = false;
  double fairness_weight = 1.0;
  double eta1 = 1.0;   // accuracy weight in the composite score
  double eta2 = 0.01;  // strategy redundancy-weight bonus
  double eta3 = 0.001; // variance penalty
};

// Profile defaults: tau and the composite-score weights differ per dataset.
SelectionParams default_selection_params(DatasetProfile profile, int k);

// Cumulative per-client selection counts, carried across rounds.
struct SelectionState {
  std::vector<int> counts;
  int round_index = 0;

  explicit SelectionState(int n_clients = 0) : counts(n_clients, 0) {}
};

struct StrategyScore {
  std::string strategy;
  double score = 0.0;
  double accuracy = 0.0;
  double variance = 0.0;
  int selected_count = 0;
};

struct SelectionOutcome {
  std::vector<int> selected;  // client ids, ascending
  std::string winning_strategy;
  std::vector<StrategyScore> per_strategy_scores;  // bank order
};

// Accuracy of a trial aggregation of the given client ids, evaluated on
// server-held validation data.
using EvalFn = std::function<double(const std::vector<int>& selected_ids)>;

// r_i = 1 - ||dw_i - mean|| / (max_j ||dw_j - mean|| + eps), then min-max
// normalized to [0, 1).
std::vector<double> relevance_scores(const std::vector<ClientUpdate>& updates, double epsilon);

// Pairwise cosine similarity, zero diagonal. Updates whose norm falls below
// epsilon contribute zero similarity.
std::vector<std::vector<double>> similarity_matrix(const std::vector<ClientUpdate>& updates,
                                                   double epsilon = 1e-8);

// (1-gamma) * r_norm + gamma * ||dw_i|| / (max_j ||dw_j|| + eps)
std::vector<double> magnitude_boosted_relevance(const std::vector<double>& r_norm,
                                                const std::vector<ClientUpdate>& updates,
                                                double gamma, double epsilon);

// Hard cap: ids with counts[i] >= max_selections leave the candidate pool.
std::vector<int> apply_max_selection_exclusion(const SelectionState& state, int max_selections);

// Assembles the selection QUBO over the candidate pool:
//   Q_ii   = -beta_r * r_i + lambda_c * (1 - 2k)   [+ fairness penalty]
//   pair   = 2 * lambda_c + lambda_eff * S_ij
// with lambda_eff = 0.3 when anti-clustering triggers (S_ij > tau), else
// lambda_r_s. The constant lambda_c * k^2 of the expanded penalty is dropped.
QuboMatrix build_qubo(const std::vector<double>& relevance,
                      const std::vector<std::vector<double>>& similarity,
                      const StrategyConfig& strategy, const SelectionParams& params,
                      const std::vector<int>* fairness_counts = nullptr);

// The ten strategies in bank order; MNIST values are used verbatim, the
// CINIC-10 profile remaps the cardinality penalties.
std::vector<StrategyConfig> strategy_bank(DatasetProfile profile);

// Mean over parameter dimensions of the per-dimension population standard
// deviation across the selected updates.
double update_variance(const std::vector<ClientUpdate>& selected_updates);

// eta1 * accuracy + eta2 * lambda_r_s - eta3 * variance
double composite_score(double accuracy, double lambda_r_s, double variance, double eta1,
                       double eta2, double eta3);

// Full strategy-competition loop: scores every bank strategy's annealed
// selection and returns the best one. Increments state.counts for the
// winning selection. Throws std::runtime_error when every candidate is
// excluded (infeasible round).
SelectionOutcome select_clients(const std::vector<ClientUpdate>& updates,
                                const SelectionParams& params, SelectionState& state,
                                const EvalFn& eval_fn, const std::vector<StrategyConfig>& bank,
                                const AnnealParams& anneal);

}  // namespace fedqubo
