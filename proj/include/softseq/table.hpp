#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "softseq/numeric.hpp"
#include "softseq/random.hpp"
#include "softseq/seqspace.hpp"

namespace softseq {

/**
 * Dense per-(state, action) table over one prefix tree, row-major with
 * tree.num_actions() columns. The EOS column (index V) exists only in
 * VariableLen mode. Tags keep reward tables, logit tables and derived
 * tables distinct types with identical layout.
 */
template <class Tag>
struct StateActionTable {
  PrefixTree tree;
  std::vector<double> values;  // state_count x num_actions

  double at(StateId s, TokenId a) const {
    return values[static_cast<std::size_t>(s * tree.num_actions() + a)];
  }
  double& at(StateId s, TokenId a) {
    return values[static_cast<std::size_t>(s * tree.num_actions() + a)];
  }
  std::span<const double> row(StateId s) const {
    return {values.data() + s * tree.num_actions(),
            static_cast<std::size_t>(tree.num_actions())};
  }
  std::span<double> row(StateId s) {
    return {values.data() + s * tree.num_actions(),
            static_cast<std::size_t>(tree.num_actions())};
  }
};

struct RewardTag {};
struct LogitTag {};
struct MarginalTag {};

/** Per-edge log-rewards r(s, a). In VariableLen mode the vocabulary slots of
 *  depth T-1 states are structurally invalid (no response extends past the
 *  horizon) and are kept at -inf by every constructor in this library. */
using RewardTable = StateActionTable<RewardTag>;

/** Per-edge next-token logits q(s, a); all slots participate in the row
 *  softargmax, which is what lets an unenforced table leak mass. */
using LogitTable = StateActionTable<LogitTag>;

/** Per-edge probabilities in linear domain (prefix marginals, visit mass). */
using MarginalTable = StateActionTable<MarginalTag>;

template <class Tag>
inline StateActionTable<Tag> make_table(const PrefixTree& tree, double fill = 0.0) {
  StateActionTable<Tag> t;
  t.tree = tree;
  t.values.assign(static_cast<std::size_t>(tree.state_count()) *
                      static_cast<std::size_t>(tree.num_actions()),
                  fill);
  return t;
}

/** True if action a exists structurally at state s: in VariableLen mode the
 *  vocabulary actions of depth T-1 states do not. */
inline bool action_valid(const PrefixTree& tree, StateId s, TokenId a) {
  if (tree.spec().mode == LengthMode::kFixedLen) return true;
  if (a == tree.spec().eos_id()) return true;
  return !tree.is_last_depth(s);
}

/** Zero reward table (structurally invalid slots at -inf). */
inline RewardTable zero_rewards(const PrefixTree& tree) {
  RewardTable r = make_table<RewardTag>(tree, 0.0);
  if (tree.spec().mode == LengthMode::kVariableLen && tree.spec().max_len >= 1) {
    const std::int32_t last = tree.spec().max_len - 1;
    for (StateId s = tree.level_begin(last); s < tree.level_end(last); ++s) {
      for (TokenId y = 0; y < tree.spec().vocab_size; ++y) r.at(s, y) = kNegInf;
    }
  }
  return r;
}

/** Reward table with iid uniform [-scale, scale] entries on structural
 *  edges, -inf on structurally invalid slots. */
inline RewardTable random_reward_table(const PrefixTree& tree, RandomStream& rng,
                                       double scale = 1.0) {
  RewardTable r = zero_rewards(tree);
  for (StateId s = 0; s < tree.state_count(); ++s) {
    for (TokenId a = 0; a < tree.num_actions(); ++a) {
      if (action_valid(tree, s, a)) r.at(s, a) = scale * (2.0 * rng.next_unit() - 1.0);
    }
  }
  return r;
}

/** Logit table with iid uniform [-scale, scale] entries in every slot,
 *  including the horizon-invalid ones (the table is deliberately
 *  unenforced; see enforce_terminal). */
inline LogitTable random_logit_table(const PrefixTree& tree, RandomStream& rng,
                                     double scale = 1.0) {
  LogitTable q = make_table<LogitTag>(tree, 0.0);
  for (double& v : q.values) v = scale * (2.0 * rng.next_unit() - 1.0);
  return q;
}

}  // namespace softseq
