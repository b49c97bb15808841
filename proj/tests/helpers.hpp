#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include <softseq/softseq.hpp>

#include "oracle.hpp"

namespace testutil {

/** Absolute-tolerance comparison that also accepts matching infinities. */
inline bool near(double a, double b, double tol) {
  if (a == b) return true;  // covers equal infinities
  return std::fabs(a - b) <= tol;
}

/** Independently built prefix -> row index map (literal BFS order). */
inline std::map<softseq::Sequence, std::size_t> prefix_index(const softseq::VocabSpec& spec) {
  std::map<softseq::Sequence, std::size_t> index;
  const std::vector<softseq::Sequence> prefixes = oracle::bfs_prefixes(spec);
  for (std::size_t i = 0; i < prefixes.size(); ++i) index[prefixes[i]] = i;
  return index;
}

/**
 * Edge lookup for a table using only its documented layout (BFS row order,
 * action-major columns, EOS last) and the oracle's own BFS index, so oracle
 * computations never route through the library's tree arithmetic.
 */
template <class Tag>
inline oracle::EdgeFn edge_fn(const softseq::StateActionTable<Tag>& table) {
  auto index = std::make_shared<std::map<softseq::Sequence, std::size_t>>(
      prefix_index(table.tree.spec()));
  const std::size_t num_actions = static_cast<std::size_t>(table.tree.num_actions());
  const std::vector<double>* values = &table.values;
  return [index, num_actions, values](const softseq::Sequence& prefix, softseq::TokenId a) {
    return (*values)[index->at(prefix) * num_actions + static_cast<std::size_t>(a)];
  };
}

/** Spaces small enough for exhaustive oracles, covering both modes and V=1. */
inline std::vector<softseq::VocabSpec> small_spaces() {
  using softseq::LengthMode;
  return {
      {1, 1, LengthMode::kVariableLen}, {1, 3, LengthMode::kVariableLen},
      {2, 2, LengthMode::kVariableLen}, {2, 4, LengthMode::kVariableLen},
      {3, 3, LengthMode::kVariableLen}, {4, 2, LengthMode::kVariableLen},
      {1, 1, LengthMode::kFixedLen},    {1, 3, LengthMode::kFixedLen},
      {2, 2, LengthMode::kFixedLen},    {2, 4, LengthMode::kFixedLen},
      {3, 3, LengthMode::kFixedLen},    {4, 2, LengthMode::kFixedLen},
  };
}

/** Linear-domain probabilities of a library distribution, in canonical order. */
inline std::vector<double> probs_of(const softseq::SeqDistribution& p) {
  std::vector<double> out(p.logp.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = p.logp[i] == -oracle::kInf ? 0.0 : std::exp(p.logp[i]);
  }
  return out;
}

}  // namespace testutil
