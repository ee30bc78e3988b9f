#include "fedqubo/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "fedqubo/common.hpp"

namespace fedqubo {

namespace {

// Positions sorted by client id; fixes the summation order so results do not
// depend on the order updates arrive in.
std::vector<int> canonical_order(const std::vector<ClientUpdate>& updates) {
  std::vector<int> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return updates[a].client_id < updates[b].client_id;
  });
  return order;
}

void validate_updates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) {
    throw std::invalid_argument("selection: update list is empty");
  }
  const std::size_t dim = updates.front().delta.size();
  std::unordered_set<int> ids;
  for (const auto& u : updates) {
    if (u.delta.size() != dim) {
      throw std::invalid_argument("selection: client deltas have mismatched lengths");
    }
    if (!ids.insert(u.client_id).second) {
      throw std::invalid_argument("selection: duplicate client id " +
                                  std::to_string(u.client_id));
    }
  }
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

DatasetProfile parse_dataset_profile(const std::string& name) {
  if (name == "mnist") return DatasetProfile::mnist;
  if (name == "cinic10") return DatasetProfile::cinic10;
  throw std::invalid_argument("unknown dataset profile '" + name + "' (expected mnist|cinic10)");
}

std::string to_string(DatasetProfile profile) {
  return profile == DatasetProfile::mnist ? "mnist" : "cinic10";
}

SelectionParams default_selection_params(DatasetProfile profile, int k) {
  SelectionParams p;
  p.k = k;
  if (profile == DatasetProfile::mnist) {
    p.tau = 0.98;
    p.eta1 = 1.0;
    p.eta2 = 0.01;
    p.eta3 = 0.001;
  } else {
    p.tau = 0.90;
    p.eta1 = 1.033;
    p.eta2 = 0.01;
    p.eta3 = 1.082;
  }
  return p;
}

std::vector<double> relevance_scores(const std::vector<ClientUpdate>& updates, double epsilon) {
  validate_updates(updates);
  const int n = static_cast<int>(updates.size());
  const std::size_t dim = updates.front().delta.size();
  const std::vector<int> order = canonical_order(updates);

  std::vector<double> mean(dim, 0.0);
  for (int p : order) {
    const auto& d = updates[p].delta;
    for (std::size_t j = 0; j < dim; ++j) mean[j] += d[j];
  }
  for (double& m : mean) m /= n;

  std::vector<double> dist(n, 0.0);
  double max_dist = 0.0;
  for (int p = 0; p < n; ++p) {
    double s = 0.0;
    const auto& d = updates[p].delta;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = d[j] - mean[j];
      s += diff * diff;
    }
    dist[p] = std::sqrt(s);
    max_dist = std::max(max_dist, dist[p]);
  }

  std::vector<double> r(n);
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < n; ++p) {
    r[p] = 1.0 - dist[p] / (max_dist + epsilon);
    r_min = std::min(r_min, r[p]);
    r_max = std::max(r_max, r[p]);
  }
  for (int p = 0; p < n; ++p) {
    r[p] = (r[p] - r_min) / (r_max - r_min + epsilon);
  }
  return r;
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<ClientUpdate>& updates,
                                                   double epsilon) {
  validate_updates(updates);
  const int n = static_cast<int>(updates.size());
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) norms[i] = l2_norm(updates[i].delta);

  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // a non-updating client is uninformative, not maximally similar
      if (norms[i] < epsilon || norms[j] < epsilon) continue;
      double dot = 0.0;
      const auto& a = updates[i].delta;
      const auto& b = updates[j].delta;
      for (std::size_t d = 0; d < a.size(); ++d) dot += a[d] * b[d];
      const double c = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      s[i][j] = c;
      s[j][i] = c;
    }
  }
  return s;
}

std::vector<double> magnitude_boosted_relevance(const std::vector<double>& r_norm,
                                                const std::vector<ClientUpdate>& updates,
                                                double gamma, double epsilon) {
  if (r_norm.size() != updates.size()) {
    throw std::invalid_argument("magnitude_boosted_relevance: length mismatch");
  }
  double max_norm = 0.0;
  std::vector<double> norms(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    norms[i] = l2_norm(updates[i].delta);
    max_norm = std::max(max_norm, norms[i]);
  }
  std::vector<double> out(r_norm.size());
  for (std::size_t i = 0; i < r_norm.size(); ++i) {
    out[i] = (1.0 - gamma) * r_norm[i] + gamma * norms[i] / (max_norm + epsilon);
  }
  return out;
}

std::vector<int> apply_max_selection_exclusion(const SelectionState& state, int max_selections) {
  std::vector<int> excluded;
  for (std::size_t i = 0; i < state.counts.size(); ++i) {
    if (state.counts[i] >= max_selections) excluded.push_back(static_cast<int>(i));
  }
  return excluded;
}

QuboMatrix build_qubo(const std::vector<double>& relevance,
                      const std::vector<std::vector<double>>& similarity,
                      const StrategyConfig& strategy, const SelectionParams& params,
                      const std::vector<int>* fairness_counts) {
  const int n = static_cast<int>(relevance.size());
  if (n == 0) throw std::invalid_argument("build_qubo: empty relevance vector");
  if (static_cast<int>(similarity.size()) != n) {
    throw std::invalid_argument("build_qubo: similarity size does not match relevance");
  }
  for (const auto& row : similarity) {
    if (static_cast<int>(row.size()) != n) {
      throw std::invalid_argument("build_qubo: similarity matrix is not square");
    }
  }
  if (fairness_counts && static_cast<int>(fairness_counts->size()) != n) {
    throw std::invalid_argument("build_qubo: fairness counts length mismatch");
  }

  QuboMatrix q(n);
  const double cardinality_linear = strategy.lambda_c * (1.0 - 2.0 * params.k);
  for (int i = 0; i < n; ++i) {
    double diag = -params.beta_r * relevance[i] + cardinality_linear;
    if (fairness_counts) {
      diag += params.fairness_weight *
              (static_cast<double>((*fairness_counts)[i]) / params.max_selections) * params.beta_r;
    }
    q.set(i, i, diag);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = similarity[i][j];
      const double lambda_eff =
          (strategy.anti_clustering && s > params.tau) ? 0.3 : strategy.lambda_r_s;
      q.set_pair(i, j, 2.0 * strategy.lambda_c + lambda_eff * s);
    }
  }
  return q;
}

std::vector<StrategyConfig> strategy_bank(DatasetProfile profile) {
  // Table-ordered bank; anti-clustering only for the two strongest consensus
  // strategies, magnitude boost only for Magnitude-Hybrid.
  std::vector<StrategyConfig> bank = {
      {"Max-Consensus", 0.02, 3.0, true, false},
      {"Ultra-Consensus", 0.03, 2.0, true, false},
      {"High-Consensus", 0.05, 1.0, false, false},
      {"Med-Consensus", 0.04, 1.5, false, false},
      {"Magnitude-Hybrid", 0.10, 1.0, false, true},
      {"Balanced", 0.15, 0.5, false, false},
      {"Low-Diversity", 0.20, 0.4, false, false},
      {"High-Diversity", 0.25, 0.5, false, false},
      {"Ultra-Diversity", 0.35, 0.3, false, false},
      {"Max-Diversity", 0.40, 0.2, false, false},
  };
  if (profile == DatasetProfile::cinic10) {
    // consensus penalties spread over [1.2, 2.0] ascending with consensus
    // strength, diversity penalties over [0.6, 0.9]
    const double c_step = (2.0 - 1.2) / 3.0;
    const double d_step = (0.9 - 0.6) / 3.0;
    auto set_lambda_c = [&](const std::string& name, double v) {
      for (auto& s : bank) {
        if (s.name == name) s.lambda_c = v;
      }
    };
    set_lambda_c("Med-Consensus", 1.2);
    set_lambda_c("High-Consensus", 1.2 + c_step);
    set_lambda_c("Ultra-Consensus", 1.2 + 2.0 * c_step);
    set_lambda_c("Max-Consensus", 2.0);
    set_lambda_c("Magnitude-Hybrid", 1.0);
    set_lambda_c("Balanced", 1.0);
    set_lambda_c("Low-Diversity", 0.6);
    set_lambda_c("High-Diversity", 0.6 + d_step);
    set_lambda_c("Ultra-Diversity", 0.6 + 2.0 * d_step);
    set_lambda_c("Max-Diversity", 0.9);
  }
  return bank;
}

double update_variance(const std::vector<ClientUpdate>& selected_updates) {
  validate_updates(selected_updates);
  const int m = static_cast<int>(selected_updates.size());
  const std::size_t dim = selected_updates.front().delta.size();
  if (dim == 0) return 0.0;
  const std::vector<int> order = canonical_order(selected_updates);

  double total = 0.0;
  std::vector<double> mean(dim, 0.0);
  std::vector<double> sq(dim, 0.0);
  for (int p : order) {
    const auto& d = selected_updates[p].delta;
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += d[j];
      sq[j] += d[j] * d[j];
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double mu = mean[j] / m;
    const double var = std::max(0.0, sq[j] / m - mu * mu);
    total += std::sqrt(var);
  }
  return total / static_cast<double>(dim);
}

double composite_score(double accuracy, double lambda_r_s, double variance, double eta1,
                       double eta2, double eta3) {
  return eta1 * accuracy + eta2 * lambda_r_s - eta3 * variance;
}

SelectionOutcome select_clients(const std::vector<ClientUpdate>& updates,
                                const SelectionParams& params, SelectionState& state,
                                const EvalFn& eval_fn, const std::vector<StrategyConfig>& bank,
                                const AnnealParams& anneal) {
  validate_updates(updates);
  if (!eval_fn) throw std::invalid_argument("select_clients: eval_fn is required");
  if (bank.empty()) throw std::invalid_argument("select_clients: empty strategy bank");
  if (params.k < 1) throw std::invalid_argument("select_clients: k must be >= 1");

  for (const auto& u : updates) {
    if (u.client_id < 0 || u.client_id >= static_cast<int>(state.counts.size())) {
      throw std::invalid_argument("select_clients: client id " + std::to_string(u.client_id) +
                                  " outside selection state of size " +
                                  std::to_string(state.counts.size()));
    }
  }

  const std::vector<double> r_norm = relevance_scores(updates, params.epsilon);
  const std::vector<std::vector<double>> sim = similarity_matrix(updates, params.epsilon);
  const std::vector<int> excluded = apply_max_selection_exclusion(state, params.max_selections);
  const std::unordered_set<int> excluded_set(excluded.begin(), excluded.end());

  // candidate pool in ascending client-id order
  std::vector<int> candidates;  // positions into `updates`
  for (int p : canonical_order(updates)) {
    if (!excluded_set.count(updates[p].client_id)) candidates.push_back(p);
  }
  if (candidates.empty()) {
    throw std::runtime_error("select_clients: every client is excluded; round is infeasible");
  }
  const int pool = static_cast<int>(candidates.size());

  std::unordered_map<int, const ClientUpdate*> by_id;
  for (const auto& u : updates) by_id.emplace(u.client_id, &u);

  std::vector<std::vector<double>> sim_cand(pool, std::vector<double>(pool, 0.0));
  for (int a = 0; a < pool; ++a) {
    for (int b = 0; b < pool; ++b) sim_cand[a][b] = sim[candidates[a]][candidates[b]];
  }
  std::vector<int> fairness_cand(pool, 0);
  for (int a = 0; a < pool; ++a) fairness_cand[a] = state.counts[updates[candidates[a]].client_id];

  // fallback order: by normalized relevance, ties to the lower client id
  std::vector<int> by_relevance = candidates;
  std::sort(by_relevance.begin(), by_relevance.end(), [&](int a, int b) {
    if (r_norm[a] != r_norm[b]) return r_norm[a] > r_norm[b];
    return updates[a].client_id < updates[b].client_id;
  });

  std::optional<std::vector<double>> r_mag;

  SelectionOutcome outcome;
  double best_score = 0.0;
  bool have_best = false;

  for (std::size_t si = 0; si < bank.size(); ++si) {
    const StrategyConfig& strat = bank[si];
    const std::vector<double>* r_full = &r_norm;
    if (strat.magnitude_boost) {
      if (!r_mag) {
        r_mag = magnitude_boosted_relevance(r_norm, updates, params.gamma, params.epsilon);
      }
      r_full = &*r_mag;
    }
    std::vector<double> r_cand(pool);
    for (int a = 0; a < pool; ++a) r_cand[a] = (*r_full)[candidates[a]];

    const QuboMatrix q = build_qubo(r_cand, sim_cand, strat, params,
                                    params.fairness_mode ? &fairness_cand : nullptr);
    AnnealParams strat_anneal = anneal;
    strat_anneal.seed = mix_seed(anneal.seed, si);
    const BitVector x = solve_sa(q, strat_anneal);

    std::vector<int> selected_ids;
    for (int a = 0; a < pool; ++a) {
      if (x[a]) selected_ids.push_back(updates[candidates[a]].client_id);
    }
    if (selected_ids.empty()) {
      // a round must select someone: top relevance fallback
      const int take = std::min<int>(params.k, pool);
      for (int t = 0; t < take; ++t) selected_ids.push_back(updates[by_relevance[t]].client_id);
      std::sort(selected_ids.begin(), selected_ids.end());
    }

    std::vector<ClientUpdate> chosen;
    chosen.reserve(selected_ids.size());
    for (int id : selected_ids) chosen.push_back(*by_id.at(id));

    const double accuracy = eval_fn(selected_ids);
    const double variance = update_variance(chosen);
    const double score =
        composite_score(accuracy, strat.lambda_r_s, variance, params.eta1, params.eta2, params.eta3);

    outcome.per_strategy_scores.push_back(
        {strat.name, score, accuracy, variance, static_cast<int>(selected_ids.size())});
    if (!have_best || score > best_score) {
      have_best = true;
      best_score = score;
      outcome.selected = selected_ids;
      outcome.winning_strategy = strat.name;
    }
  }

  for (int id : outcome.selected) state.counts[id] += 1;
  state.round_index += 1;
  return outcome;
}

}  // namespace fedqubo
