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

/** Additive path score R(y) = sum of r(s_t, y_t) along the response's edges;
 *  -inf propagates (one infeasible edge kills the path). */
inline double score_R(const RewardTable& r, std::span<const TokenId> y) {
  double acc = 0.0;
  fold_path(r.tree, y, [&](StateId s, TokenId a) { acc += r.at(s, a); });
  return acc;
}

/**
 * Terminal lifting for VariableLen spaces: every vocabulary edge scores 0
 * and the EOS edge closing response y carries the whole sequence-level score
 * R_values[id(y)]. Exact, not an approximation: score_R of the result
 * reproduces R_values entry for entry. FixedLen spaces have no EOS edge;
 * see lift_final_edges.
 */
inline RewardTable lift_terminal(const PrefixTree& tree,
                                 std::span<const double> R_values) {
  const VocabSpec& spec = tree.spec();
  if (spec.mode != LengthMode::kVariableLen) {
    throw ModeError("lift_terminal requires a VariableLen space");
  }
  if (static_cast<std::int64_t>(R_values.size()) != sequence_count(spec)) {
    throw SchemaError("per-sequence score table has wrong length");
  }
  RewardTable r = zero_rewards(tree);
  // In VariableLen mode response id == state id of the EOS-emitting state.
  for (StateId s = 0; s < tree.state_count(); ++s) {
    r.at(s, spec.eos_id()) = R_values[static_cast<std::size_t>(s)];
  }
  return r;
}

/**
 * FixedLen counterpart of lift_terminal: the per-sequence score lands on the
 * response's final (depth T-1) edge, all other edges score 0.
 */
inline RewardTable lift_final_edges(const PrefixTree& tree,
                                    std::span<const double> R_values) {
  const VocabSpec& spec = tree.spec();
  if (spec.mode != LengthMode::kFixedLen) {
    throw ModeError("lift_final_edges requires a FixedLen space");
  }
  if (static_cast<std::int64_t>(R_values.size()) != sequence_count(spec)) {
    throw SchemaError("per-sequence score table has wrong length");
  }
  RewardTable r = zero_rewards(tree);
  const std::int32_t last = spec.max_len - 1;
  for (StateId s = tree.level_begin(last); s < tree.level_end(last); ++s) {
    const SeqId base = (s - tree.level_begin(last)) * spec.vocab_size;
    for (TokenId y = 0; y < spec.vocab_size; ++y) {
      r.at(s, y) = R_values[static_cast<std::size_t>(base + y)];
    }
  }
  return r;
}

/** Mode dispatch for installing per-sequence scores as edge rewards. */
inline RewardTable rewards_from_sequence_scores(const PrefixTree& tree,
                                                std::span<const double> R_values) {
  return tree.spec().mode == LengthMode::kVariableLen ? lift_terminal(tree, R_values)
                                                      : lift_final_edges(tree, R_values);
}

/** Log-partition by direct enumeration: logsumexp of every response score. */
inline double log_partition_bruteforce(const RewardTable& r,
                                       std::int64_t budget = default_state_budget()) {
  double acc = kNegInf;
  for_each_sequence(
      r.tree, [&](SeqId, const Sequence& y) { acc = log_add(acc, score_R(r, y)); },
      budget);
  return acc;
}

/**
 * Soft-Bellman sweep over the prefix tree: one logsumexp per state, children
 * before parents. Returns the per-state soft values; the root entry is the
 * log-partition. Work is linear in the table size.
 */
inline std::vector<double> log_partition_dp(const RewardTable& r) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  std::vector<double> value(static_cast<std::size_t>(tree.state_count()), kNegInf);
  std::vector<double> row(static_cast<std::size_t>(tree.num_actions()), kNegInf);
  for (StateId s = tree.state_count() - 1; s >= 0; --s) {
    const bool last = tree.is_last_depth(s);
    for (TokenId a = 0; a < tree.num_actions(); ++a) {
      const bool is_eos =
          spec.mode == LengthMode::kVariableLen && a == spec.eos_id();
      if (is_eos) {
        row[static_cast<std::size_t>(a)] = r.at(s, a);
      } else if (!last) {
        row[static_cast<std::size_t>(a)] =
            r.at(s, a) + value[static_cast<std::size_t>(tree.child(s, a))];
      } else {
        row[static_cast<std::size_t>(a)] =
            spec.mode == LengthMode::kFixedLen ? r.at(s, a) : kNegInf;
      }
    }
    value[static_cast<std::size_t>(s)] = log_sum_exp(row);
  }
  return value;
}

struct BestPath {
  Sequence sequence;
  double value = kNegInf;
};

/**
 * Hard-max counterpart of log_partition_dp. Ties are broken toward the
 * lexicographically smallest optimal response under the order EOS < 0 < 1 <
 * ... < V-1 at each step, i.e. shortest-then-smallest-token. Throws
 * DegenerateError when every response scores -inf.
 */
inline BestPath best_path(const RewardTable& r) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  const bool variable = spec.mode == LengthMode::kVariableLen;
  std::vector<double> best(static_cast<std::size_t>(tree.state_count()), kNegInf);
  std::vector<TokenId> act(static_cast<std::size_t>(tree.state_count()), -1);
  const auto consider = [&](StateId s, TokenId a, double v) {
    if (v > best[static_cast<std::size_t>(s)]) {
      best[static_cast<std::size_t>(s)] = v;
      act[static_cast<std::size_t>(s)] = a;
    }
  };
  for (StateId s = tree.state_count() - 1; s >= 0; --s) {
    const bool last = tree.is_last_depth(s);
    if (variable) consider(s, spec.eos_id(), r.at(s, spec.eos_id()));
    if (!last) {
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        consider(s, y, r.at(s, y) + best[static_cast<std::size_t>(tree.child(s, y))]);
      }
    } else if (!variable) {
      for (TokenId y = 0; y < spec.vocab_size; ++y) consider(s, y, r.at(s, y));
    }
  }
  BestPath out;
  out.value = best[0];
  if (out.value == kNegInf) {
    throw DegenerateError("every response scores -inf; no feasible path");
  }
  StateId s = tree.root();
  for (;;) {
    const TokenId a = act[static_cast<std::size_t>(s)];
    out.sequence.push_back(a);
    if (variable && a == spec.eos_id()) break;
    if (tree.is_last_depth(s)) break;
    s = tree.child(s, a);
  }
  return out;
}

/**
 * Exact Gibbs distribution log p(y) = R(y) - A. The normalizer comes from
 * the same enumeration as the scores, so the result normalizes to machine
 * precision. DegenerateError if the partition is -inf.
 */
inline SeqDistribution ebm_dist(const RewardTable& r,
                                std::int64_t budget = default_state_budget()) {
  const std::int64_t count = sequence_count(r.tree.spec(), budget);
  std::vector<double> logp(static_cast<std::size_t>(count));
  for_each_sequence(
      r.tree,
      [&](SeqId id, const Sequence& y) { logp[static_cast<std::size_t>(id)] = score_R(r, y); },
      budget);
  const double a = log_sum_exp(logp);
  if (a == kNegInf) {
    throw DegenerateError("every response scores -inf; Gibbs distribution undefined");
  }
  for (double& lp : logp) {
    if (lp != kNegInf) lp -= a;
  }
  return SeqDistribution{r.tree.spec(), std::move(logp)};
}

/** Exact negative log-likelihood A - R(y) under the Gibbs distribution. */
inline double nll_ebm(const RewardTable& r, std::span<const TokenId> y,
                      std::int64_t budget = default_state_budget()) {
  return log_partition_bruteforce(r, budget) - score_R(r, y);
}

/** Gradient of the log-partition in the per-sequence score parameterization:
 *  exactly the Gibbs probabilities. */
inline std::vector<double> grad_log_partition_R(const RewardTable& r,
                                                std::int64_t budget = default_state_budget()) {
  const SeqDistribution p = ebm_dist(r, budget);
  std::vector<double> g(p.logp.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(p.logp[i]);
  return g;
}

}  // namespace softseq
