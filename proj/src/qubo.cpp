#include "fedqubo/qubo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace fedqubo {

QuboMatrix::QuboMatrix(int n) : n_(n) {
  if (n < 1) {
    throw std::invalid_argument("QuboMatrix: size must be >= 1, got " + std::to_string(n));
  }
  coeffs_.assign(static_cast<std::size_t>(n) * n, 0.0);
}

void QuboMatrix::set(int i, int j, double v) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) {
    throw std::out_of_range("QuboMatrix::set: index out of range");
  }
  if (!std::isfinite(v)) {
    throw std::invalid_argument("QuboMatrix::set: coefficient must be finite");
  }
  coeffs_[static_cast<std::size_t>(i) * n_ + j] = v;
  coeffs_[static_cast<std::size_t>(j) * n_ + i] = v;
}

void QuboMatrix::set_pair(int i, int j, double total) {
  if (i == j) {
    throw std::invalid_argument("QuboMatrix::set_pair: needs two distinct indices");
  }
  set(i, j, total / 2.0);
}

double QuboMatrix::max_abs_coefficient() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

double energy(const QuboMatrix& q, const BitVector& x) {
  const int n = q.size();
  if (static_cast<int>(x.size()) != n) {
    throw std::invalid_argument("energy: assignment length " + std::to_string(x.size()) +
                                " does not match problem size " + std::to_string(n));
  }
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!x[i]) continue;
    const double* row = q.row(i);
    e += row[i];
    for (int j = i + 1; j < n; ++j) {
      if (x[j]) e += 2.0 * row[j];
    }
  }
  return e;
}

bool lower_encoding(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("lower_encoding: length mismatch");
  }
  for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

BitVector solve_exact(const QuboMatrix& q) {
  const int n = q.size();
  if (n > kExactSolverMaxN) {
    throw std::invalid_argument("solve_exact: n = " + std::to_string(n) + " exceeds limit " +
                                std::to_string(kExactSolverMaxN));
  }
  const std::uint64_t count = std::uint64_t{1} << n;
  double best_e = 0.0;  // pattern 0 has energy 0
  std::uint64_t best_m = 0;
  std::vector<int> ones;
  ones.reserve(n);
  for (std::uint64_t m = 1; m < count; ++m) {
    ones.clear();
    for (int i = 0; i < n; ++i) {
      if ((m >> i) & 1u) ones.push_back(i);
    }
    double e = 0.0;
    for (std::size_t a = 0; a < ones.size(); ++a) {
      const double* row = q.row(ones[a]);
      e += row[ones[a]];
      for (std::size_t b = a + 1; b < ones.size(); ++b) e += 2.0 * row[ones[b]];
    }
    // strict improvement only: increasing m order makes ties resolve to the
    // lowest integer encoding
    if (e < best_e) {
      best_e = e;
      best_m = m;
    }
  }
  BitVector x(n, 0);
  for (int i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((best_m >> i) & 1u);
  return x;
}

namespace {

struct ResolvedSchedule {
  double t_initial;
  double t_final;
  int sweeps;
};

ResolvedSchedule resolve_schedule(const QuboMatrix& q, const AnnealParams& p) {
  ResolvedSchedule s{};
  if (p.initial_temperature > 0.0) {
    s.t_initial = p.initial_temperature;
    if (!(p.final_temperature > 0.0) || p.final_temperature >= s.t_initial) {
      throw std::invalid_argument("solve_sa: need 0 < final_temperature < initial_temperature");
    }
    s.t_final = p.final_temperature;
  } else {
    double scale = q.max_abs_coefficient();
    s.t_initial = scale > 0.0 ? scale : 1.0;
    if (!(p.final_temperature > 0.0)) {
      throw std::invalid_argument("solve_sa: final_temperature must be positive");
    }
    s.t_final = std::min(p.final_temperature, s.t_initial * 1e-6);
  }
  s.sweeps = p.sweeps > 0 ? p.sweeps : 100 * q.size();
  return s;
}

}  // namespace

BitVector solve_sa(const QuboMatrix& q, const AnnealParams& params) {
  const int n = q.size();
  if (params.restarts < 1) {
    throw std::invalid_argument("solve_sa: restarts must be >= 1");
  }
  const ResolvedSchedule sched = resolve_schedule(q, params);
  const double ratio =
      sched.sweeps > 1 ? std::pow(sched.t_final / sched.t_initial, 1.0 / (sched.sweeps - 1)) : 1.0;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  BitVector best;
  double best_e = 0.0;
  bool have_best = false;

  BitVector x(n);
  BitVector restart_best(n);

  for (int r = 0; r < params.restarts; ++r) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>(rng() & 1u);
    double e = energy(q, x);
    restart_best = x;
    double restart_best_e = e;

    double t = sched.t_initial;
    for (int s = 0; s < sched.sweeps; ++s) {
      for (int i = 0; i < n; ++i) {
        const double* row = q.row(i);
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        const double coupling = acc - row[i] * x[i];
        const double delta = (x[i] ? -1.0 : 1.0) * (row[i] + 2.0 * coupling);
        if (delta <= 0.0 || unif(rng) < std::exp(-delta / t)) {
          x[i] ^= 1u;
          e += delta;
          if (e < restart_best_e) {
            restart_best_e = e;
            restart_best = x;
          }
        }
      }
      t *= ratio;
    }

    // compare restarts on freshly computed energies; incremental tracking is
    // only a within-restart filter
    const double candidate_e = energy(q, restart_best);
    if (!have_best || candidate_e < best_e ||
        (candidate_e == best_e && lower_encoding(restart_best, best))) {
      have_best = true;
      best_e = candidate_e;
      best = restart_best;
    }
  }
  return best;
}

}  // namespace fedqubo
