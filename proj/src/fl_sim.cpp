#include "fedqubo/fl_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "fedqubo/common.hpp"

namespace fedqubo {

namespace {

struct ParamView {
  double* w1;  // hidden x input
  double* b1;
  double* w2;  // classes x hidden
  double* b2;
};

ParamView view(const MlpArch& arch, std::vector<double>& params) {
  ParamView v{};
  v.w1 = params.data();
  v.b1 = v.w1 + static_cast<std::size_t>(arch.hidden_dim) * arch.input_dim;
  v.w2 = v.b1 + arch.hidden_dim;
  v.b2 = v.w2 + static_cast<std::size_t>(arch.num_classes) * arch.hidden_dim;
  return v;
}

struct ConstParamView {
  const double* w1;
  const double* b1;
  const double* w2;
  const double* b2;
};

ConstParamView view(const MlpArch& arch, const std::vector<double>& params) {
  ConstParamView v{};
  v.w1 = params.data();
  v.b1 = v.w1 + static_cast<std::size_t>(arch.hidden_dim) * arch.input_dim;
  v.w2 = v.b1 + arch.hidden_dim;
  v.b2 = v.w2 + static_cast<std::size_t>(arch.num_classes) * arch.hidden_dim;
  return v;
}

// forward pass into caller-provided buffers
void forward(const MlpArch& arch, const ConstParamView& p, const float* x, double* pre_hidden,
             double* hidden, double* logits) {
  for (int h = 0; h < arch.hidden_dim; ++h) {
    const double* row = p.w1 + static_cast<std::size_t>(h) * arch.input_dim;
    double acc = p.b1[h];
    for (int i = 0; i < arch.input_dim; ++i) acc += row[i] * x[i];
    pre_hidden[h] = acc;
    hidden[h] = acc > 0.0 ? acc : 0.0;
  }
  for (int c = 0; c < arch.num_classes; ++c) {
    const double* row = p.w2 + static_cast<std::size_t>(c) * arch.hidden_dim;
    double acc = p.b2[c];
    for (int h = 0; h < arch.hidden_dim; ++h) acc += row[h] * hidden[h];
    logits[c] = acc;
  }
}

double log_sum_exp(const double* logits, int n) {
  double m = logits[0];
  for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(logits[i] - m);
  return m + std::log(s);
}

void run_workers(int n_items, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n_items));
  if (threads == 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n_items;) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

GlobalModel init_model(const MlpArch& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.hidden_dim < 1 || arch.num_classes < 2) {
    throw std::invalid_argument("init_model: invalid architecture");
  }
  GlobalModel model;
  model.arch = arch;
  model.params.resize(arch.param_count());
  std::mt19937_64 rng(seed);

  ParamView p = view(arch, model.params);
  const double a1 = std::sqrt(6.0 / (arch.input_dim + arch.hidden_dim));
  std::uniform_real_distribution<double> u1(-a1, a1);
  for (int i = 0; i < arch.hidden_dim * arch.input_dim; ++i) p.w1[i] = u1(rng);
  for (int i = 0; i < arch.hidden_dim; ++i) p.b1[i] = 0.0;
  const double a2 = std::sqrt(6.0 / (arch.hidden_dim + arch.num_classes));
  std::uniform_real_distribution<double> u2(-a2, a2);
  for (int i = 0; i < arch.num_classes * arch.hidden_dim; ++i) p.w2[i] = u2(rng);
  for (int i = 0; i < arch.num_classes; ++i) p.b2[i] = 0.0;
  return model;
}

ClientDataset slice_dataset(const RawDataset& data, const std::vector<int>& indices) {
  ClientDataset out;
  out.feature_dim = data.cols;
  out.labels.reserve(indices.size());
  out.features.reserve(indices.size() * static_cast<std::size_t>(data.cols));
  for (int idx : indices) {
    if (idx < 0 || idx >= data.rows) {
      throw std::out_of_range("slice_dataset: index out of range");
    }
    out.labels.push_back(data.labels[idx]);
    const float* s = data.sample(idx);
    out.features.insert(out.features.end(), s, s + data.cols);
  }
  return out;
}

std::vector<std::vector<int>> dirichlet_partition(const std::vector<int>& labels, int n_clients,
                                                  double alpha, std::uint64_t seed) {
  if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
  if (static_cast<int>(labels.size()) < n_clients) {
    throw std::invalid_argument("dirichlet_partition: fewer samples than clients");
  }

  int classes = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("dirichlet_partition: negative label");
    classes = std::max(classes, l + 1);
  }
  std::vector<std::vector<int>> class_indices(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    class_indices[labels[i]].push_back(static_cast<int>(i));
  }

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<std::vector<int>> assignment(n_clients);

  for (int c = 0; c < classes; ++c) {
    auto& idx = class_indices[c];
    if (idx.empty()) continue;
    std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<double> weights(n_clients);
    double sum = 0.0;
    for (double& w : weights) {
      w = gamma(rng);
      sum += w;
    }
    if (!(sum > 0.0)) {
      // extreme alpha can underflow every draw: give the class to one client
      weights.assign(n_clients, 0.0);
      weights[static_cast<int>(rng() % n_clients)] = 1.0;
      sum = 1.0;
    }

    const int m = static_cast<int>(idx.size());
    std::vector<int> take(n_clients);
    std::vector<std::pair<double, int>> remainders(n_clients);
    int assigned = 0;
    for (int j = 0; j < n_clients; ++j) {
      const double share = weights[j] / sum * m;
      take[j] = static_cast<int>(std::floor(share));
      remainders[j] = {share - take[j], j};
      assigned += take[j];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int r = 0; r < m - assigned; ++r) take[remainders[r].second] += 1;

    int cursor = 0;
    for (int j = 0; j < n_clients; ++j) {
      for (int t = 0; t < take[j]; ++t) assignment[j].push_back(idx[cursor++]);
    }
  }

  // an empty client cannot train: steal one sample from the largest client
  for (int j = 0; j < n_clients; ++j) {
    if (!assignment[j].empty()) continue;
    int largest = 0;
    for (int l = 1; l < n_clients; ++l) {
      if (assignment[l].size() > assignment[largest].size()) largest = l;
    }
    assignment[j].push_back(assignment[largest].back());
    assignment[largest].pop_back();
  }
  for (auto& a : assignment) std::sort(a.begin(), a.end());
  return assignment;
}

ClientUpdate local_train(const GlobalModel& global, const ClientDataset& data,
                         const TrainConfig& cfg, std::uint64_t rng_seed, int client_id) {
  if (data.size() == 0) throw std::invalid_argument("local_train: empty client dataset");
  if (data.feature_dim != global.arch.input_dim) {
    throw std::invalid_argument("local_train: feature dim does not match model input");
  }
  if (cfg.batch_size < 1) throw std::invalid_argument("local_train: batch_size must be >= 1");

  const MlpArch& arch = global.arch;
  std::vector<double> params = global.params;
  ParamView p = view(arch, params);
  ConstParamView cp{p.w1, p.b1, p.w2, p.b2};

  std::mt19937_64 rng(rng_seed);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> grad(params.size());
  ParamView g = view(arch, grad);
  std::vector<double> pre_hidden(arch.hidden_dim);
  std::vector<double> hidden(arch.hidden_dim);
  std::vector<double> logits(arch.num_classes);
  std::vector<double> dlogits(arch.num_classes);
  std::vector<double> dhidden(arch.hidden_dim);

  std::size_t cursor = 0;
  for (int step = 0; step < cfg.local_iterations; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int s = order[cursor];
      cursor = (cursor + 1) % order.size();
      const float* x = data.sample(s);
      const int y = data.labels[s];

      forward(arch, cp, x, pre_hidden.data(), hidden.data(), logits.data());
      const double lse = log_sum_exp(logits.data(), arch.num_classes);
      for (int c = 0; c < arch.num_classes; ++c) {
        dlogits[c] = std::exp(logits[c] - lse) - (c == y ? 1.0 : 0.0);
      }
      for (int c = 0; c < arch.num_classes; ++c) {
        double* w2row = g.w2 + static_cast<std::size_t>(c) * arch.hidden_dim;
        const double d = dlogits[c];
        for (int h = 0; h < arch.hidden_dim; ++h) w2row[h] += d * hidden[h];
        g.b2[c] += d;
      }
      for (int h = 0; h < arch.hidden_dim; ++h) {
        double acc = 0.0;
        for (int c = 0; c < arch.num_classes; ++c) {
          acc += dlogits[c] * cp.w2[static_cast<std::size_t>(c) * arch.hidden_dim + h];
        }
        dhidden[h] = pre_hidden[h] > 0.0 ? acc : 0.0;
      }
      for (int h = 0; h < arch.hidden_dim; ++h) {
        double* w1row = g.w1 + static_cast<std::size_t>(h) * arch.input_dim;
        const double d = dhidden[h];
        if (d == 0.0) continue;
        for (int i = 0; i < arch.input_dim; ++i) w1row[i] += d * x[i];
        g.b1[h] += d;
      }
    }
    const double scale = cfg.client_lr / cfg.batch_size;
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= scale * grad[i];
  }

  ClientUpdate update;
  update.client_id = client_id;
  update.num_samples = data.size();
  update.delta.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    update.delta[i] = params[i] - global.params[i];
  }
  return update;
}

GlobalModel fedavg_aggregate(const GlobalModel& global, const std::vector<ClientUpdate>& updates,
                             const std::vector<int>& selected, double server_lr) {
  if (selected.empty()) throw std::invalid_argument("fedavg_aggregate: empty selection");
  std::unordered_map<int, const ClientUpdate*> by_id;
  for (const auto& u : updates) by_id.emplace(u.client_id, &u);

  std::vector<int> ids = selected;
  std::sort(ids.begin(), ids.end());
  long total = 0;
  for (int id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("fedavg_aggregate: unknown client id " + std::to_string(id));
    }
    if (it->second->delta.size() != global.params.size()) {
      throw std::invalid_argument("fedavg_aggregate: update length does not match model");
    }
    total += it->second->num_samples;
  }
  if (total <= 0) throw std::invalid_argument("fedavg_aggregate: non-positive total sample count");

  GlobalModel out = global;
  for (int id : ids) {
    const ClientUpdate& u = *by_id.at(id);
    const double w = server_lr * static_cast<double>(u.num_samples) / static_cast<double>(total);
    for (std::size_t i = 0; i < out.params.size(); ++i) out.params[i] += w * u.delta[i];
  }
  return out;
}

EvalResult evaluate(const GlobalModel& model, const ClientDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  if (test.feature_dim != model.arch.input_dim) {
    throw std::invalid_argument("evaluate: feature dim does not match model input");
  }
  const MlpArch& arch = model.arch;
  ConstParamView p = view(arch, model.params);
  std::vector<double> pre_hidden(arch.hidden_dim);
  std::vector<double> hidden(arch.hidden_dim);
  std::vector<double> logits(arch.num_classes);

  long correct = 0;
  double loss = 0.0;
  for (int s = 0; s < test.size(); ++s) {
    forward(arch, p, test.sample(s), pre_hidden.data(), hidden.data(), logits.data());
    int best = 0;
    for (int c = 1; c < arch.num_classes; ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    const int y = test.labels[s];
    if (y < 0 || y >= arch.num_classes) {
      throw std::invalid_argument("evaluate: label outside model classes");
    }
    if (best == y) correct += 1;
    loss += log_sum_exp(logits.data(), arch.num_classes) - logits[y];
  }
  return {static_cast<double>(correct) / test.size(), loss / test.size()};
}

Method parse_method(const std::string& name) {
  if (name == "fedavg_full") return Method::fedavg_full;
  if (name == "qubo") return Method::qubo;
  if (name == "random") return Method::random_matched;
  throw std::invalid_argument("unknown method '" + name + "' (expected fedavg_full|qubo|random)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::fedavg_full: return "fedavg_full";
    case Method::qubo: return "qubo";
    case Method::random_matched: return "random";
  }
  return "unknown";
}

FederationData make_federation(const RawDataset& train, const RawDataset& test, int n_clients,
                               double alpha, double validation_fraction, std::uint64_t seed) {
  FederationData fed;
  fed.num_classes = std::max(train.classes, test.classes);

  const SplitIndices split =
      stratified_split(train.labels, validation_fraction, mix_seed(seed, 0x7a11d8));
  fed.validation = slice_dataset(train, split.holdout);

  std::vector<int> train_labels;
  train_labels.reserve(split.remainder.size());
  for (int idx : split.remainder) train_labels.push_back(train.labels[idx]);

  const auto parts =
      dirichlet_partition(train_labels, n_clients, alpha, mix_seed(seed, 0xd1e1c7));
  fed.clients.reserve(n_clients);
  for (const auto& part : parts) {
    std::vector<int> original;
    original.reserve(part.size());
    for (int pos : part) original.push_back(split.remainder[pos]);
    fed.clients.push_back(slice_dataset(train, original));
  }

  std::vector<int> all_test(test.rows);
  std::iota(all_test.begin(), all_test.end(), 0);
  fed.test = slice_dataset(test, all_test);
  return fed;
}

std::vector<RoundRecord> run_experiment(const TrainConfig& cfg, Method method,
                                        const SelectionParams& selection_params,
                                        const FederationData& data, std::uint64_t seed,
                                        const std::vector<StrategyConfig>& bank,
                                        const AnnealParams& anneal,
                                        const std::vector<int>* matched_sizes,
                                        int worker_threads) {
  const int n = static_cast<int>(data.clients.size());
  if (n < 1) throw std::invalid_argument("run_experiment: no clients");
  if (cfg.rounds < 0) throw std::invalid_argument("run_experiment: negative round count");

  MlpArch arch;
  arch.input_dim = data.test.feature_dim;
  arch.num_classes = data.num_classes;
  GlobalModel global = init_model(arch, mix_seed(seed, 0x90de1));

  SelectionState state(n);
  std::vector<RoundRecord> records;
  records.reserve(cfg.rounds);

  for (int t = 0; t < cfg.rounds; ++t) {
    std::vector<ClientUpdate> updates(n);
    run_workers(n, worker_threads, [&](int i) {
      updates[i] = local_train(global, data.clients[i], cfg, mix_seed(seed, 0x10ca1, (static_cast<std::uint64_t>(t) << 20) + i), i);
    });

    RoundRecord rec;
    rec.round = t;
    double server_lr = cfg.server_lr_fedavg;

    switch (method) {
      case Method::fedavg_full: {
        rec.selected.resize(n);
        std::iota(rec.selected.begin(), rec.selected.end(), 0);
        break;
      }
      case Method::qubo: {
        server_lr = cfg.server_lr_qubo;
        EvalFn eval_fn = [&](const std::vector<int>& ids) {
          const GlobalModel trial = fedavg_aggregate(global, updates, ids, cfg.server_lr_qubo);
          return evaluate(trial, data.validation).accuracy;
        };
        AnnealParams round_anneal = anneal;
        round_anneal.seed = mix_seed(seed ^ anneal.seed, 0x5acc, t);
        const SelectionOutcome outcome =
            select_clients(updates, selection_params, state, eval_fn, bank, round_anneal);
        rec.selected = outcome.selected;
        rec.winning_strategy = outcome.winning_strategy;
        break;
      }
      case Method::random_matched: {
        int size = std::min(selection_params.k, n);
        if (matched_sizes) {
          if (t >= static_cast<int>(matched_sizes->size())) {
            throw std::invalid_argument("run_experiment: matched size list shorter than rounds");
          }
          size = std::min((*matched_sizes)[t], n);
        }
        size = std::max(size, 1);
        std::vector<int> ids(n);
        std::iota(ids.begin(), ids.end(), 0);
        std::mt19937_64 rng(mix_seed(seed, 0xa2d0, t));
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(size);
        std::sort(ids.begin(), ids.end());
        rec.selected = ids;
        break;
      }
    }

    global = fedavg_aggregate(global, updates, rec.selected, server_lr);
    const EvalResult ev = evaluate(global, data.test);
    rec.accuracy = ev.accuracy;
    rec.loss = ev.loss;
    rec.per_round_privacy = per_round_privacy(static_cast<double>(rec.selected.size()), n);
    rec.gradient_variance = gradient_variance(updates, rec.selected);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace fedqubo
