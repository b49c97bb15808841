#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/random.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/table.hpp"

namespace softseq {

/** Exact distribution over the whole response space, stored as log
 *  probabilities indexed by canonical SeqId. */
struct SeqDistribution {
  VocabSpec space;
  std::vector<double> logp;

  double prob(SeqId id) const { return std::exp(logp[static_cast<std::size_t>(id)]); }
};

/**
 * Validating constructor: logp must have one entry per response and
 * logsumexp(logp) must vanish within tol.
 */
inline SeqDistribution make_seq_distribution(const VocabSpec& space,
                                             std::vector<double> logp,
                                             double tol = 1e-9) {
  const std::int64_t count = sequence_count(space);
  if (static_cast<std::int64_t>(logp.size()) != count) {
    throw SchemaError("logp has " + std::to_string(logp.size()) + " entries, expected " +
                      std::to_string(count));
  }
  const double total = log_sum_exp(logp);
  if (!(std::abs(total) <= tol)) {
    throw ValidityError("distribution does not normalize: logsumexp = " +
                        std::to_string(total));
  }
  return SeqDistribution{space, std::move(logp)};
}

/** Full-support distribution: softargmax of iid scale * N(0,1) scores. */
inline SeqDistribution random_seq_distribution(const VocabSpec& space, RandomStream& rng,
                                               double scale = 1.0) {
  const std::int64_t count = sequence_count(space);
  std::vector<double> logp(static_cast<std::size_t>(count));
  for (double& v : logp) v = scale * rng.next_gaussian();
  const double total = log_sum_exp(logp);
  for (double& v : logp) v -= total;
  return SeqDistribution{space, std::move(logp)};
}

struct PolicyTag {};

/**
 * Per-state next-token distribution in log domain, one row per prefix-tree
 * state. A valid policy has every row normalized; in VariableLen mode a
 * valid policy additionally puts probability 1 on EOS at depth T-1
 * (softargmax of an unenforced logit table violates this, which is exactly
 * the mass leak that arm_dist detects).
 */
struct NextTokenPolicy {
  PrefixTree tree;
  std::vector<double> logpi;  // state_count x num_actions

  double at(StateId s, TokenId a) const {
    return logpi[static_cast<std::size_t>(s * tree.num_actions() + a)];
  }
  double& at(StateId s, TokenId a) {
    return logpi[static_cast<std::size_t>(s * tree.num_actions() + a)];
  }
  std::span<const double> row(StateId s) const {
    return {logpi.data() + s * tree.num_actions(),
            static_cast<std::size_t>(tree.num_actions())};
  }
};

/** Validating constructor: every row must normalize within tol. */
inline NextTokenPolicy make_policy(const PrefixTree& tree, std::vector<double> logpi,
                                   double tol = 1e-9) {
  const std::size_t expect = static_cast<std::size_t>(tree.state_count()) *
                             static_cast<std::size_t>(tree.num_actions());
  if (logpi.size() != expect) {
    throw SchemaError("policy table has wrong shape");
  }
  NextTokenPolicy pi{tree, std::move(logpi)};
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const double total = log_sum_exp(pi.row(s));
    if (!(std::abs(total) <= tol)) {
      throw ValidityError("policy row at state " + std::to_string(s) +
                          " does not normalize: logsumexp = " + std::to_string(total));
    }
  }
  return pi;
}

namespace detail {

/**
 * Log prefix marginals of p at every state: log of the total mass of
 * responses that extend the state's prefix. Computed bottom-up; children
 * have larger ids than parents, so one descending pass suffices.
 */
inline std::vector<double> log_prefix_marginals(const SeqDistribution& p,
                                                const PrefixTree& tree) {
  const VocabSpec& spec = tree.spec();
  std::vector<double> lm(static_cast<std::size_t>(tree.state_count()), kNegInf);
  if (spec.mode == LengthMode::kVariableLen) {
    // Each state s owns exactly the response prefix(s) + EOS, whose id is s.
    for (StateId s = 0; s < tree.state_count(); ++s) {
      lm[static_cast<std::size_t>(s)] = p.logp[static_cast<std::size_t>(s)];
    }
  } else {
    const std::int32_t last = spec.max_len - 1;
    for (StateId s = tree.level_begin(last); s < tree.level_end(last); ++s) {
      const SeqId base = (s - tree.level_begin(last)) * spec.vocab_size;
      double acc = kNegInf;
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        acc = log_add(acc, p.logp[static_cast<std::size_t>(base + y)]);
      }
      lm[static_cast<std::size_t>(s)] = acc;
    }
  }
  for (StateId s = tree.state_count() - 1; s > 0; --s) {
    const StateId up = tree.parent(s);
    lm[static_cast<std::size_t>(up)] =
        log_add(lm[static_cast<std::size_t>(up)], lm[static_cast<std::size_t>(s)]);
  }
  return lm;
}

}  // namespace detail

/**
 * Chain-rule factorization of p: logpi(y | s) = log p(prefix extends by y) -
 * log p(prefix reaches s). Throws SupportError naming the offending prefix
 * if any prefix has zero mass (the conditional is undefined there).
 */
inline NextTokenPolicy seq_to_policy(const SeqDistribution& p, const PrefixTree& tree) {
  const VocabSpec& spec = tree.spec();
  if (!(p.space == spec)) throw SchemaError("distribution space does not match tree");
  const std::vector<double> lm = detail::log_prefix_marginals(p, tree);
  for (StateId s = 0; s < tree.state_count(); ++s) {
    if (lm[static_cast<std::size_t>(s)] == kNegInf) {
      throw SupportError("zero-mass prefix " +
                         detail::token_list(prefix_of_state(tree, s)) +
                         "; conditional next-token distribution is undefined");
    }
  }
  NextTokenPolicy pi{tree, std::vector<double>(static_cast<std::size_t>(tree.state_count()) *
                                                   static_cast<std::size_t>(tree.num_actions()),
                                               kNegInf)};
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const double base = lm[static_cast<std::size_t>(s)];
    const bool last = tree.is_last_depth(s);
    if (spec.mode == LengthMode::kVariableLen) {
      pi.at(s, spec.eos_id()) = p.logp[static_cast<std::size_t>(s)] - base;
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          pi.at(s, y) = lm[static_cast<std::size_t>(tree.child(s, y))] - base;
        }
      }
    } else {
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          pi.at(s, y) = lm[static_cast<std::size_t>(tree.child(s, y))] - base;
        }
      } else {
        const SeqId first = (s - tree.level_begin(spec.max_len - 1)) * spec.vocab_size;
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          pi.at(s, y) = p.logp[static_cast<std::size_t>(first + y)] - base;
        }
      }
    }
  }
  return pi;
}

/** seq_to_policy with a freshly built tree for p's space. */
inline NextTokenPolicy seq_to_policy(const SeqDistribution& p) {
  return seq_to_policy(p, build_tree(p.space));
}

namespace detail {

/** Path log-probabilities under a policy for every response, no validation
 *  of the total. */
inline std::vector<double> path_log_probs(const NextTokenPolicy& pi,
                                          std::int64_t budget) {
  const std::int64_t count = sequence_count(pi.tree.spec(), budget);
  std::vector<double> logp(static_cast<std::size_t>(count));
  for_each_sequence(
      pi.tree,
      [&](SeqId id, const Sequence& y) {
        double acc = 0.0;
        fold_path(pi.tree, y, [&](StateId s, TokenId a) { acc += pi.at(s, a); });
        logp[static_cast<std::size_t>(id)] = acc;
      },
      budget);
  return logp;
}

}  // namespace detail

/**
 * Product of the chain-rule conditionals over every response. For a valid
 * policy the result normalizes; a total off by more than 1e-9 (a leaky
 * VariableLen policy) raises ValidityError.
 */
inline SeqDistribution policy_to_seq(const NextTokenPolicy& pi,
                                     std::int64_t budget = default_state_budget()) {
  std::vector<double> logp = detail::path_log_probs(pi, budget);
  const double total = log_sum_exp(logp);
  if (!(std::abs(total) <= 1e-9)) {
    throw ValidityError("policy paths do not normalize over the response space: "
                        "logsumexp = " + std::to_string(total));
  }
  return SeqDistribution{pi.tree.spec(), std::move(logp)};
}

/**
 * One ancestral sample from pi. In VariableLen mode EOS is forced at depth
 * T-1, so every sample is a well-formed response even under a leaky policy.
 */
inline Sequence sample_one(const NextTokenPolicy& pi, RandomStream rng) {
  const VocabSpec& spec = pi.tree.spec();
  Sequence y;
  StateId s = pi.tree.root();
  for (;;) {
    const bool last = pi.tree.is_last_depth(s);
    if (spec.mode == LengthMode::kVariableLen && last) {
      y.push_back(spec.eos_id());
      return y;
    }
    const double u = rng.next_unit();
    std::span<const double> row = pi.row(s);
    double acc = 0.0;
    TokenId pick = -1;
    for (TokenId a = 0; a < pi.tree.num_actions(); ++a) {
      if (row[static_cast<std::size_t>(a)] == kNegInf) continue;
      acc += std::exp(row[static_cast<std::size_t>(a)]);
      pick = a;
      if (u < acc) break;
    }
    if (pick < 0) {
      throw DegenerateError("state " + std::to_string(s) + " has an all--inf policy row");
    }
    if (spec.mode == LengthMode::kVariableLen && pick == spec.eos_id()) {
      y.push_back(pick);
      return y;
    }
    y.push_back(pick);
    if (spec.mode == LengthMode::kFixedLen && pi.tree.is_last_depth(s)) return y;
    s = pi.tree.child(s, pick);
  }
}

/**
 * n ancestral samples. Sample i is drawn from the substream rng.split(i), so
 * the result is a pure function of (seed, stream_id, n) no matter how many
 * workers partition the loop.
 */
inline std::vector<Sequence> sample(const NextTokenPolicy& pi, const RandomStream& rng,
                                    std::int64_t n, int workers = 1) {
  if (n < 0) throw SchemaError("sample count must be >= 0");
  std::vector<Sequence> out(static_cast<std::size_t>(n));
  const auto run = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      out[static_cast<std::size_t>(i)] = sample_one(pi, rng.split(static_cast<std::uint64_t>(i)));
    }
  };
  if (workers <= 1 || n < 2) {
    run(0, n);
    return out;
  }
  const std::int64_t span = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (std::int64_t lo = 0; lo < n; lo += span) {
    pool.emplace_back(run, lo, std::min(n, lo + span));
  }
  for (std::thread& t : pool) t.join();
  return out;
}

/** Exact entropy -sum p log p in nats (0 log 0 = 0). */
inline double entropy_exact(const SeqDistribution& p) {
  double h = 0.0;
  for (double lp : p.logp) {
    if (lp != kNegInf) h -= std::exp(lp) * lp;
  }
  return h;
}

namespace detail {

/** Linear-domain reach probability of every state under pi. */
inline std::vector<double> visit_mass(const NextTokenPolicy& pi) {
  const PrefixTree& tree = pi.tree;
  std::vector<double> m(static_cast<std::size_t>(tree.state_count()), 0.0);
  m[0] = 1.0;
  for (StateId s = 0; s < tree.state_count(); ++s) {
    if (tree.is_last_depth(s)) continue;
    for (TokenId y = 0; y < tree.spec().vocab_size; ++y) {
      const double lp = pi.at(s, y);
      if (lp != kNegInf) {
        m[static_cast<std::size_t>(tree.child(s, y))] +=
            m[static_cast<std::size_t>(s)] * std::exp(lp);
      }
    }
  }
  return m;
}

inline double row_entropy(std::span<const double> row) {
  double h = 0.0;
  for (double lp : row) {
    if (lp != kNegInf) h -= std::exp(lp) * lp;
  }
  return h;
}

/** Exact KL between two policy rows; SupportError if q misses pi's support. */
inline double row_kl(const NextTokenPolicy& pi, const NextTokenPolicy& pi0, StateId s) {
  double kl = 0.0;
  for (TokenId a = 0; a < pi.tree.num_actions(); ++a) {
    const double lp = pi.at(s, a);
    if (lp == kNegInf) continue;
    const double lq = pi0.at(s, a);
    if (lq == kNegInf) {
      throw SupportError("support violation at state " + std::to_string(s) +
                         ", action " + std::to_string(a));
    }
    kl += std::exp(lp) * (lp - lq);
  }
  return kl;
}

}  // namespace detail

/**
 * Chain-rule entropy: sum over states of reach probability times row
 * entropy. Equals entropy_exact(policy_to_seq(pi)) for valid pi.
 */
inline double entropy_chain(const NextTokenPolicy& pi) {
  const std::vector<double> m = detail::visit_mass(pi);
  double h = 0.0;
  for (StateId s = 0; s < pi.tree.state_count(); ++s) {
    const double mass = m[static_cast<std::size_t>(s)];
    if (mass > 0.0) h += mass * detail::row_entropy(pi.row(s));
  }
  return h;
}

/** Exact KL(p || p0); SupportError where p has mass and p0 does not. */
inline double kl_exact(const SeqDistribution& p, const SeqDistribution& p0) {
  if (!(p.space == p0.space)) throw SchemaError("distributions live on different spaces");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.logp.size(); ++i) {
    const double lp = p.logp[i];
    if (lp == kNegInf) continue;
    const double lq = p0.logp[i];
    if (lq == kNegInf) {
      throw SupportError("support violation at sequence id " + std::to_string(i));
    }
    kl += std::exp(lp) * (lp - lq);
  }
  return kl;
}

/**
 * Chain-rule KL: sum over states of pi's reach probability times the exact
 * per-state KL. States pi never reaches contribute nothing and are not
 * checked for support.
 */
inline double kl_chain(const NextTokenPolicy& pi, const NextTokenPolicy& pi0) {
  if (!(pi.tree.spec() == pi0.tree.spec())) {
    throw SchemaError("policies live on different spaces");
  }
  const std::vector<double> m = detail::visit_mass(pi);
  double kl = 0.0;
  for (StateId s = 0; s < pi.tree.state_count(); ++s) {
    const double mass = m[static_cast<std::size_t>(s)];
    if (mass > 0.0) kl += mass * detail::row_kl(pi, pi0, s);
  }
  return kl;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t count = 0;
};

/**
 * Rao-Blackwellized Monte Carlo KL: prefixes are sampled from pi and the
 * per-state KL is accumulated exactly along each path, so a deterministic
 * policy pair has zero variance. Support violations at visited states raise
 * SupportError, exactly as in kl_chain.
 */
inline McEstimate kl_mc(const NextTokenPolicy& pi, const NextTokenPolicy& pi0,
                        const RandomStream& rng, std::int64_t n) {
  if (!(pi.tree.spec() == pi0.tree.spec())) {
    throw SchemaError("policies live on different spaces");
  }
  if (n < 1) throw SchemaError("kl_mc needs at least one sample");
  double sum = 0.0;
  double sumsq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const Sequence y = sample_one(pi, rng.split(static_cast<std::uint64_t>(i)));
    double term = 0.0;
    fold_path(pi.tree, y, [&](StateId s, TokenId) { term += detail::row_kl(pi, pi0, s); });
    sum += term;
    sumsq += term * term;
  }
  McEstimate est;
  est.count = n;
  est.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * est.mean) / static_cast<double>(n - 1));
    est.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return est;
}

/**
 * Linear-domain mass that rho places on every (state, action) edge: entry
 * (s, a) is the rho-probability that a response's path uses that edge. Row
 * sums give the reach probability of each state.
 */
inline MarginalTable edge_visit_mass(const SeqDistribution& rho, const PrefixTree& tree,
                                     std::int64_t budget = default_state_budget()) {
  if (!(rho.space == tree.spec())) throw SchemaError("distribution space does not match tree");
  MarginalTable g = make_table<MarginalTag>(tree, 0.0);
  for_each_sequence(
      tree,
      [&](SeqId id, const Sequence& y) {
        const double p = rho.prob(id);
        if (p == 0.0) return;
        fold_path(tree, y, [&](StateId s, TokenId a) { g.at(s, a) += p; });
      },
      budget);
  return g;
}

}  // namespace softseq
