#include "rsched/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rsched/model.hpp"
#include "rsched/parallel.hpp"
#include "rsched/quadrature.hpp"

namespace rsched {

std::size_t QuantizedChain::snap(double v) const {
  const long half = static_cast<long>(size() / 2);
  const double r = v / spacing;
  const double fl = std::floor(r);
  const double frac = r - fl;
  long j = 0;
  constexpr double kTie = 1e-9;
  if (std::abs(frac - 0.5) <= kTie) {
    // Tie: the candidate closer to zero.
    const auto lo = static_cast<long>(fl);
    j = std::abs(lo) <= std::abs(lo + 1) ? lo : lo + 1;
  } else {
    j = static_cast<long>(frac < 0.5 ? fl : fl + 1.0);
  }
  j = std::clamp(j, -half, half);
  return static_cast<std::size_t>(j + half);
}

std::size_t QuantizedChain::index_of(double delta) const {
  const std::size_t i = snap(delta);
  if (std::abs(delta_states[i] - delta) > 1e-9 * std::max(1.0, spacing)) {
    throw std::invalid_argument("delta is not a lattice state of the chain");
  }
  return i;
}

QuantizedChain quantize(const ModelParams& params, int n_delta, int noise_points,
                        std::optional<double> delta_q) {
  params.validate();
  if (n_delta < 3 || n_delta % 2 == 0) throw std::invalid_argument("n_delta must be odd and >= 3");
  if (noise_points != 2 && noise_points != 3 && noise_points != 5) {
    throw std::invalid_argument("noise_points must be 2, 3 or 5");
  }

  QuantizedChain chain;
  chain.params = params;
  chain.channel = ChannelMatrix::from(params);

  const auto q = NormalQuadrature::make(noise_points);
  const double sigma = params.sigma();
  double total = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    chain.noise.push_back({sigma * q.nodes[k] + 0.0, q.weights[k]});
    total += q.weights[k];
  }
  for (auto& pt : chain.noise) pt.prob /= total;
  std::ostringstream scheme;
  scheme << noise_points << "-point Gauss-Hermite quantization of N(0, sigma^2), moments matched "
         << "through order " << 2 * noise_points - 1;
  chain.noise_scheme = scheme.str();

  const int half = (n_delta - 1) / 2;
  if (delta_q) {
    if (!(*delta_q > 0.0)) throw std::invalid_argument("delta_q must be > 0");
    chain.spacing = *delta_q / half;
  } else {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& pt : chain.noise) {
      if (pt.value > 0.0) smallest = std::min(smallest, pt.value);
    }
    chain.spacing = smallest;
  }
  for (int j = -half; j <= half; ++j) chain.delta_states.push_back(j * chain.spacing);

  chain.next_idle.resize(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (const auto& pt : chain.noise) {
      chain.next_idle[i].push_back(chain.snap(params.a * chain.delta_states[i] + pt.value));
    }
  }
  for (const auto& pt : chain.noise) chain.next_reset.push_back(chain.snap(pt.value));
  return chain;
}

namespace {

void check_horizon(const QuantizedChain& chain) {
  if (chain.params.horizon > kMaxExactHorizon) {
    throw std::invalid_argument("horizon too large for exact evaluation");
  }
}

// exp(gamma d) per [u][c][i]
std::array<std::array<std::vector<double>, 2>, 2> cost_factors(const QuantizedChain& chain) {
  std::array<std::array<std::vector<double>, 2>, 2> f;
  for (int u = 0; u < 2; ++u) {
    for (int c = 0; c < 2; ++c) {
      for (double d : chain.delta_states) {
        f[u][c].push_back(std::exp(chain.params.gamma * stage_cost(d, c, u, chain.params)));
      }
    }
  }
  return f;
}

}  // namespace

double exact_policy_cost(const QuantizedChain& chain, const ChainPolicy& policy, double delta0,
                         int c0) {
  check_horizon(chain);
  require_binary(c0, "initial channel state");
  const std::size_t n = chain.size();
  const auto factor = cost_factors(chain);
  std::array<std::vector<double>, 2> mass{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  mass[c0][chain.index_of(delta0)] = 1.0;

  double total = 0.0;
  const int horizon = chain.params.horizon;
  for (int t = 0; t <= horizon; ++t) {
    std::array<std::vector<double>, 2> next{std::vector<double>(n, 0.0),
                                            std::vector<double>(n, 0.0)};
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        if (mass[c][i] == 0.0) continue;
        const int u = policy(t, i, c);
        require_binary(u, "policy action");
        const double f = mass[c][i] * factor[u][c][i];
        if (t == horizon) {
          total += f;
          continue;
        }
        for (std::size_t k = 0; k < chain.noise.size(); ++k) {
          const std::size_t j = chain.next(i, u, c, k);
          for (int cn = 0; cn < 2; ++cn) {
            next[cn][j] += f * chain.noise[k].prob * chain.channel(c, cn);
          }
        }
      }
    }
    mass = std::move(next);
  }
  return total;
}

double exact_policy_cost(const QuantizedChain& chain, const ChainPolicyTable& policy,
                         double delta0, int c0) {
  if (policy.size() != static_cast<std::size_t>(chain.params.horizon) + 1) {
    throw std::invalid_argument("policy table does not cover stages 0..T");
  }
  return exact_policy_cost(
      chain,
      [&](int t, std::size_t i, int c) {
        const std::uint8_t u = policy[t][c][i];
        return u == kUnvisited ? 0 : static_cast<int>(u);
      },
      delta0, c0);
}

BackwardInduction backward_induction(const QuantizedChain& chain) {
  check_horizon(chain);
  const std::size_t n = chain.size();
  const int horizon = chain.params.horizon;
  const auto factor = cost_factors(chain);

  BackwardInduction bi;
  bi.value.push_back({std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)});
  bi.policy.resize(static_cast<std::size_t>(horizon) + 1);
  bi.relative_gap.resize(static_cast<std::size_t>(horizon) + 1);

  for (int k = 0; k <= horizon; ++k) {
    const auto& v = bi.value.back();
    std::array<std::vector<double>, 2> next{std::vector<double>(n), std::vector<double>(n)};
    const auto stage = static_cast<std::size_t>(horizon - k);
    bi.policy[stage] = {std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n)};
    bi.relative_gap[stage] = {std::vector<double>(n), std::vector<double>(n)};
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 2> q{};
        for (int u = 0; u < 2; ++u) {
          double e = 0.0;
          for (std::size_t kk = 0; kk < chain.noise.size(); ++kk) {
            const std::size_t j = chain.next(i, u, c, kk);
            for (int cn = 0; cn < 2; ++cn) {
              e += chain.noise[kk].prob * chain.channel(c, cn) * v[cn][j];
            }
          }
          q[u] = factor[u][c][i] * e;
        }
        const std::uint8_t u = q[1] < q[0] ? 1 : 0;
        bi.policy[stage][c][i] = u;
        bi.relative_gap[stage][c][i] = std::abs(q[0] - q[1]) / std::min(q[0], q[1]);
        next[c][i] = q[u];
      }
    }
    bi.value.push_back(std::move(next));
  }
  return bi;
}

double StartCertificate::max_relative_discrepancy() const {
  const double vals[3] = {enumeration_value, backward_value, certified_cost};
  double worst = 0.0;
  for (double a : vals) {
    for (double b : vals) worst = std::max(worst, std::abs(a - b) / std::min(a, b));
  }
  return worst;
}

namespace {

struct StateRef {
  std::size_t i;
  int c;
};

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  std::uint64_t prefix = 0;
  std::uint64_t last = 0;

  bool better_than(const Candidate& o) const {
    if (value != o.value) return value < o.value;
    return prefix != o.prefix ? prefix < o.prefix : last < o.last;
  }
};

class Enumerator {
 public:
  Enumerator(const QuantizedChain& chain, std::size_t i0, int c0)
      : chain_(chain), factor_(cost_factors(chain)), horizon_(chain.params.horizon) {
    const std::size_t n = chain.size();
    reach_.resize(static_cast<std::size_t>(horizon_) + 1);
    pos_.resize(reach_.size());
    for (auto& p : pos_) p = {std::vector<int>(n, -1), std::vector<int>(n, -1)};
    add(0, i0, c0);
    for (int t = 0; t < horizon_; ++t) {
      for (const auto& s : reach_[t]) {
        for (int u = 0; u < 2; ++u) {
          for (std::size_t k = 0; k < chain.noise.size(); ++k) {
            if (chain.noise[k].prob <= 0.0) continue;
            for (int cn = 0; cn < 2; ++cn) {
              if (chain.channel(s.c, cn) > 0.0) add(t + 1, chain.next(s.i, u, s.c, k), cn);
            }
          }
        }
      }
    }
    for (int t = 0; t < horizon_; ++t) prefix_bits_ += static_cast<int>(reach_[t].size());
    last_bits_ = static_cast<int>(reach_[horizon_].size());
  }

  int decision_bits() const { return prefix_bits_ + last_bits_; }

  Candidate run(unsigned threads) const {
    const std::uint64_t prefixes = std::uint64_t{1} << prefix_bits_;
    const std::size_t n_chunks = static_cast<std::size_t>(std::min<std::uint64_t>(prefixes, 4096));
    const std::uint64_t per_chunk = (prefixes + n_chunks - 1) / n_chunks;
    std::vector<Candidate> best(n_chunks);
    parallel_for(n_chunks, threads, [&](std::size_t ci) {
      const std::uint64_t lo = ci * per_chunk;
      const std::uint64_t hi = std::min(prefixes, lo + per_chunk);
      for (std::uint64_t p = lo; p < hi; ++p) {
        const Candidate cand = best_completion(p);
        if (cand.better_than(best[ci])) best[ci] = cand;
      }
    });
    Candidate out;
    for (const auto& b : best) {
      if (b.better_than(out)) out = b;
    }
    return out;
  }

  /// Decisions of (prefix, last) as a table, with kUnvisited on states the
  /// policy reaches with probability zero.
  ChainPolicyTable decode(const Candidate& cand) const {
    const std::size_t n = chain_.size();
    ChainPolicyTable table(reach_.size());
    for (auto& st : table) {
      st = {std::vector<std::uint8_t>(n, kUnvisited), std::vector<std::uint8_t>(n, kUnvisited)};
    }
    const auto mass = forward(cand.prefix);
    int offset = 0;
    for (int t = 0; t <= horizon_; ++t) {
      for (std::size_t s = 0; s < reach_[t].size(); ++s) {
        const auto& ref = reach_[t][s];
        if (mass[t][s] <= 0.0) continue;
        const std::uint64_t code = t < horizon_ ? cand.prefix >> (offset + s) : cand.last >> s;
        table[t][ref.c][ref.i] = static_cast<std::uint8_t>(code & 1U);
      }
      if (t < horizon_) offset += static_cast<int>(reach_[t].size());
    }
    return table;
  }

 private:
  void add(int t, std::size_t i, int c) {
    if (pos_[t][c][i] >= 0) return;
    pos_[t][c][i] = static_cast<int>(reach_[t].size());
    reach_[t].push_back({i, c});
  }

  // Mass (probability times accumulated exp(gamma d)) over reach_[t] for
  // every stage, given the prefix decisions.
  std::vector<std::vector<double>> forward(std::uint64_t prefix) const {
    std::vector<std::vector<double>> mass(reach_.size());
    mass[0].assign(1, 1.0);
    int offset = 0;
    for (int t = 0; t < horizon_; ++t) {
      mass[t + 1].assign(reach_[t + 1].size(), 0.0);
      for (std::size_t s = 0; s < reach_[t].size(); ++s) {
        const double m = mass[t][s];
        if (m == 0.0) continue;
        const auto& ref = reach_[t][s];
        const int u = static_cast<int>((prefix >> (offset + s)) & 1U);
        const double f = m * factor_[u][ref.c][ref.i];
        for (std::size_t k = 0; k < chain_.noise.size(); ++k) {
          const std::size_t j = chain_.next(ref.i, u, ref.c, k);
          for (int cn = 0; cn < 2; ++cn) {
            const double p = chain_.noise[k].prob * chain_.channel(ref.c, cn);
            if (p > 0.0) mass[t + 1][static_cast<std::size_t>(pos_[t + 1][cn][j])] += f * p;
          }
        }
      }
      offset += static_cast<int>(reach_[t].size());
    }
    return mass;
  }

  // Minimum over all last-stage decision vectors, visited in Gray-code
  // order so that each step changes one term of the sum.
  Candidate best_completion(std::uint64_t prefix) const {
    const auto mass = forward(prefix);
    const auto& last_mass = mass[static_cast<std::size_t>(horizon_)];
    const auto& states = reach_[static_cast<std::size_t>(horizon_)];
    const std::size_t m = states.size();
    std::vector<double> a0(m), a1(m);
    for (std::size_t s = 0; s < m; ++s) {
      a0[s] = last_mass[s] * factor_[0][states[s].c][states[s].i];
      a1[s] = last_mass[s] * factor_[1][states[s].c][states[s].i];
    }
    auto exact = [&](std::uint64_t code) {
      double v = 0.0;
      for (std::size_t s = 0; s < m; ++s) v += ((code >> s) & 1U) ? a1[s] : a0[s];
      return v;
    };

    Candidate best{exact(0), prefix, 0};
    double value = best.value;
    std::uint64_t gray = 0;
    const std::uint64_t count = std::uint64_t{1} << m;
    for (std::uint64_t g = 1; g < count; ++g) {
      const int b = std::countr_zero(g);
      gray ^= std::uint64_t{1} << b;
      if ((g & 0xFF) == 0) {
        value = exact(gray);  // bound the drift of the running sum
      } else {
        value += ((gray >> b) & 1U) ? a1[b] - a0[b] : a0[b] - a1[b];
      }
      const Candidate cand{value, prefix, gray};
      if (cand.better_than(best)) best = cand;
    }
    best.value = exact(best.last);
    return best;
  }

  const QuantizedChain& chain_;
  std::array<std::array<std::vector<double>, 2>, 2> factor_;
  int horizon_;
  std::vector<std::vector<StateRef>> reach_;
  std::vector<std::array<std::vector<int>, 2>> pos_;
  int prefix_bits_ = 0;
  int last_bits_ = 0;
};

}  // namespace

BruteForceResult brute_force_optimal(const QuantizedChain& chain,
                                     std::vector<std::pair<double, int>> starts,
                                     const EnumerationLimits& limits) {
  if (limits.max_decision_bits > 62) throw std::invalid_argument("decision budget above 2^62");
  if (starts.empty()) starts = {{0.0, 0}, {0.0, 1}};

  BruteForceResult out;
  out.backward = backward_induction(chain);

  for (const auto& [delta0, c0] : starts) {
    require_binary(c0, "initial channel state");
    const std::size_t i0 = chain.index_of(delta0);
    const Enumerator en(chain, i0, c0);
    if (en.decision_bits() > limits.max_decision_bits) {
      std::ostringstream os;
      os << "enumeration from (delta=" << delta0 << ", c=" << c0 << ") needs 2^"
         << en.decision_bits() << " policies; budget is 2^" << limits.max_decision_bits;
      throw BudgetExceeded(os.str());
    }
    const Candidate best = en.run(limits.threads);

    StartCertificate cert;
    cert.delta_index = i0;
    cert.c0 = c0;
    cert.decision_bits = en.decision_bits();
    cert.policies_enumerated = std::uint64_t{1} << en.decision_bits();
    cert.enumeration_value = best.value;
    cert.backward_value = out.backward.value_at(i0, c0);
    cert.policy = en.decode(best);
    cert.certified_cost = exact_policy_cost(chain, cert.policy, delta0, c0);
    for (std::size_t t = 0; t < cert.policy.size(); ++t) {
      for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < chain.size(); ++i) {
          const std::uint8_t u = cert.policy[t][c][i];
          if (u == kUnvisited) continue;
          if (u != out.backward.policy[t][c][i] &&
              out.backward.relative_gap[t][c][i] > limits.tie_tolerance) {
            ++cert.disagreements;
          }
        }
      }
    }
    out.starts.push_back(std::move(cert));
  }
  return out;
}

}  // namespace rsched
