#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softseq/dist.hpp"
#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/table.hpp"

namespace softseq {

/**
 * Terminal enforcement for VariableLen tables: depth T-1 rows become EOS = 0
 * and vocabulary = -inf, which pins the next-token distribution there to EOS
 * and makes the softargmax model a valid distribution over the response
 * space. In FixedLen mode there is nothing to enforce and the table is
 * returned unchanged (documented no-op).
 */
inline LogitTable enforce_terminal(LogitTable q) {
  const PrefixTree& tree = q.tree;
  const VocabSpec& spec = tree.spec();
  if (spec.mode == LengthMode::kFixedLen) return q;
  const std::int32_t last = spec.max_len - 1;
  for (StateId s = tree.level_begin(last); s < tree.level_end(last); ++s) {
    for (TokenId y = 0; y < spec.vocab_size; ++y) q.at(s, y) = kNegInf;
    q.at(s, spec.eos_id()) = 0.0;
  }
  return q;
}

/** Per-state soft value V_q(s) = logsumexp of the full logit row. */
inline std::vector<double> value_table(const LogitTable& q) {
  std::vector<double> v(static_cast<std::size_t>(q.tree.state_count()));
  for (StateId s = 0; s < q.tree.state_count(); ++s) {
    v[static_cast<std::size_t>(s)] = log_sum_exp(q.row(s));
  }
  return v;
}

/**
 * Row-wise softargmax: logpi(a | s) = q(s, a) - V_q(s). Rows normalize by
 * construction. An all--inf row stays all--inf: such a state has no feasible
 * continuation, so every path through it carries zero mass (map_r_to_q only
 * produces dead rows at states whose incoming edge is itself -inf, keeping
 * the path distribution exact). Sampling raises DegenerateError if it ever
 * lands on one.
 */
inline NextTokenPolicy policy_of(const LogitTable& q) {
  const PrefixTree& tree = q.tree;
  NextTokenPolicy pi{tree, q.values};
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const double v = log_sum_exp(q.row(s));
    if (v == kNegInf) continue;
    for (TokenId a = 0; a < tree.num_actions(); ++a) {
      double& slot = pi.logpi[static_cast<std::size_t>(s * tree.num_actions() + a)];
      if (slot != kNegInf) slot -= v;
    }
  }
  return pi;
}

/**
 * Exact sequence distribution of the softargmax model: path sums of the
 * chain-rule conditionals over every response. The total mass over the
 * response space must be 1 within 1e-6; a larger deviation (an unenforced
 * VariableLen table leaking mass past the horizon) raises ValidityError.
 */
inline SeqDistribution arm_dist(const LogitTable& q,
                                std::int64_t budget = default_state_budget()) {
  const NextTokenPolicy pi = policy_of(q);
  std::vector<double> logp = detail::path_log_probs(pi, budget);
  const double total = log_sum_exp(logp);
  const double mass = std::exp(total);
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    throw ValidityError("softargmax model is not a distribution over the response "
                        "space: total mass = " + std::to_string(mass));
  }
  return SeqDistribution{q.tree.spec(), std::move(logp)};
}

/** Sum of soft values V_q(s_t) over the response's path states: the
 *  sequence-level log-partition of the softargmax model. */
inline double path_partition(const LogitTable& q, std::span<const TokenId> y) {
  const std::vector<double> v = value_table(q);
  double acc = 0.0;
  fold_path(q.tree, y, [&](StateId s, TokenId) { acc += v[static_cast<std::size_t>(s)]; });
  return acc;
}

/** Sum of raw logits q(s_t, y_t) along the response's path. */
inline double path_score(const LogitTable& q, std::span<const TokenId> y) {
  double acc = 0.0;
  fold_path(q.tree, y, [&](StateId s, TokenId a) { acc += q.at(s, a); });
  return acc;
}

/** Teacher-forcing negative log-likelihood: path_partition - path_score. A
 *  response the model excludes (any -inf logit along the path) yields +inf. */
inline double nll_arm(const LogitTable& q, std::span<const TokenId> y) {
  const std::vector<double> v = value_table(q);
  double acc = 0.0;
  bool excluded = false;
  fold_path(q.tree, y, [&](StateId s, TokenId a) {
    if (q.at(s, a) == kNegInf) {
      excluded = true;
      return;
    }
    acc += v[static_cast<std::size_t>(s)] - q.at(s, a);
  });
  return excluded ? kPosInf : acc;
}

/**
 * Gradient of path_partition(q, y) with respect to q: the softargmax row at
 * every path state, zero at every other slot. Stored sparsely as the list
 * of path states with their probability rows.
 */
struct PathGradient {
  PrefixTree tree;
  std::vector<StateId> states;  // visited states, path order
  std::vector<double> rows;     // states.size() x num_actions, linear domain

  /** Dense (state x action) table, zeros off path. */
  std::vector<double> to_dense() const {
    std::vector<double> g(static_cast<std::size_t>(tree.state_count()) *
                              static_cast<std::size_t>(tree.num_actions()),
                          0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (TokenId a = 0; a < tree.num_actions(); ++a) {
        g[static_cast<std::size_t>(states[i] * tree.num_actions() + a)] =
            rows[i * static_cast<std::size_t>(tree.num_actions()) + static_cast<std::size_t>(a)];
      }
    }
    return g;
  }
};

inline PathGradient grad_path_partition(const LogitTable& q, std::span<const TokenId> y) {
  PathGradient out;
  out.tree = q.tree;
  const std::int32_t num_actions = q.tree.num_actions();
  fold_path(q.tree, y, [&](StateId s, TokenId) {
    const double v = log_sum_exp(q.row(s));
    out.states.push_back(s);
    for (TokenId a = 0; a < num_actions; ++a) {
      const double lp = q.at(s, a);
      out.rows.push_back(lp == kNegInf ? 0.0 : std::exp(lp - v));
    }
  });
  return out;
}

}  // namespace softseq
