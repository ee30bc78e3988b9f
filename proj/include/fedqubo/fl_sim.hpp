#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedqubo/data.hpp"
#include "fedqubo/metrics.hpp"
#include "fedqubo/selection.hpp"

namespace fedqubo {

// One-hidden-layer MLP with softmax cross-entropy. Parameters flatten in
// the fixed order W1 (hidden x input, row-major), b1, W2 (classes x hidden),
// b2.
struct MlpArch {
  int input_dim = 0;
  int hidden_dim = 64;
  int num_classes = 0;

  int param_count() const {
    return hidden_dim * input_dim + hidden_dim + num_classes * hidden_dim + num_classes;
  }
};

struct GlobalModel {
  MlpArch arch;
  std::vector<double> params;
};

// Xavier-uniform initialization, deterministic given the seed.
GlobalModel init_model(const MlpArch& arch, std::uint64_t seed);

struct ClientDataset {
  std::vector<float> features;  // size() * feature_dim
  std::vector<int> labels;
  int feature_dim = 0;

  int size() const { return static_cast<int>(labels.size()); }
  const float* sample(int i) const {
    return features.data() + static_cast<std::size_t>(i) * feature_dim;
  }
};

ClientDataset slice_dataset(const RawDataset& data, const std::vector<int>& indices);

struct TrainConfig {
  int local_iterations = 20;
  int batch_size = 32;
  double client_lr = 0.1;
  double server_lr_fedavg = 0.065;
  double server_lr_qubo = 0.082;
  int rounds = 20;
  std::uint64_t seed = 0;
};

// Per-class Dirichlet(alpha) split of sample indices over clients with
// largest-remainder rounding; empty clients are repaired by stealing one
// sample from the largest client.
std::vector<std::vector<int>> dirichlet_partition(const std::vector<int>& labels, int n_clients,
                                                  double alpha, std::uint64_t seed);

// cfg.local_iterations mini-batch SGD steps from the broadcast parameters;
// batches wrap cyclically after one seeded shuffle.
ClientUpdate local_train(const GlobalModel& global, const ClientDataset& data,
                         const TrainConfig& cfg, std::uint64_t rng_seed, int client_id);

// w + server_lr * sum_{i in selected} (|D_i|/|D|) * dw_i, accumulated in
// ascending client-id order.
GlobalModel fedavg_aggregate(const GlobalModel& global, const std::vector<ClientUpdate>& updates,
                             const std::vector<int>& selected, double server_lr);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

// Argmax accuracy (ties to the lowest class index) and mean cross-entropy.
EvalResult evaluate(const GlobalModel& model, const ClientDataset& test);

enum class Method { fedavg_full, qubo, random_matched };

Method parse_method(const std::string& name);
std::string to_string(Method method);

// Client shards plus the server-held validation split and the reporting
// test set.
struct FederationData {
  std::vector<ClientDataset> clients;
  ClientDataset validation;
  ClientDataset test;
  int num_classes = 0;
};

FederationData make_federation(const RawDataset& train, const RawDataset& test, int n_clients,
                               double alpha, double validation_fraction, std::uint64_t seed);

// Runs cfg.rounds federated rounds with the given participation method.
// `matched_sizes`, when provided, pins the random method's per-round
// selection size to a previous qubo run. `worker_threads` parallelizes
// client training without affecting results.
std::vector<RoundRecord> run_experiment(const TrainConfig& cfg, Method method,
                                        const SelectionParams& selection_params,
                                        const FederationData& data, std::uint64_t seed,
                                        const std::vector<StrategyConfig>& bank,
                                        const AnnealParams& anneal,
                                        const std::vector<int>* matched_sizes = nullptr,
                                        int worker_threads = 1);

}  // namespace fedqubo
