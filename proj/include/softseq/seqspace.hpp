#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "softseq/errors.hpp"

namespace softseq {

using TokenId = std::int32_t;
using StateId = std::int64_t;
using SeqId = std::int64_t;

/** A response as a token-id vector. In VariableLen mode the last token is
 *  EOS (id = vocab_size) and EOS appears nowhere else; in FixedLen mode the
 *  vector holds exactly max_len vocabulary tokens. */
using Sequence = std::vector<TokenId>;

enum class LengthMode {
  kVariableLen,  // responses of length 1..T ending in EOS
  kFixedLen,     // responses of exactly T vocabulary tokens, no EOS
};

/** Token space shared by every table and distribution in one experiment. */
struct VocabSpec {
  std::int32_t vocab_size = 1;  // V >= 1; vocabulary token ids are 0..V-1
  std::int32_t max_len = 1;     // T >= 1; maximum response length
  LengthMode mode = LengthMode::kVariableLen;

  /** EOS token id (== vocab_size); meaningful in VariableLen mode only. */
  TokenId eos_id() const { return vocab_size; }

  friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

inline void validate(const VocabSpec& spec) {
  if (spec.vocab_size < 1) throw SchemaError("vocab_size must be >= 1");
  if (spec.max_len < 1) throw SchemaError("max_len must be >= 1");
}

inline constexpr std::int64_t kDefaultStateBudget = 10'000'000;

/** State budget: SOFTSEQ_STATE_BUDGET env var if set, else 10^7. */
inline std::int64_t default_state_budget() {
  static const std::int64_t budget = [] {
    if (const char* env = std::getenv("SOFTSEQ_STATE_BUDGET")) {
      const long long v = std::atoll(env);
      if (v > 0) return static_cast<std::int64_t>(v);
    }
    return kDefaultStateBudget;
  }();
  return budget;
}

namespace detail {

inline std::string token_list(std::span<const TokenId> toks) {
  std::string out = "(";
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(toks[i]);
  }
  out += ")";
  return out;
}

}  // namespace detail

/**
 * The response prefix tree of one prompt. States are the EOS-free prefixes
 * of length 0..T-1 in BFS order with token-ascending children, so the root
 * is state 0 and the numbering is a pure function of (V, T). The tree stores
 * only per-depth offsets; children, parents and depths are arithmetic.
 */
class PrefixTree {
 public:
  PrefixTree() = default;

  const VocabSpec& spec() const { return spec_; }
  std::int64_t state_count() const { return level_offset_.empty() ? 0 : level_offset_.back(); }
  StateId root() const { return 0; }

  /** Number of actions per state row: V+1 in VariableLen (EOS column last),
   *  V in FixedLen. */
  std::int32_t num_actions() const {
    return spec_.mode == LengthMode::kVariableLen ? spec_.vocab_size + 1
                                                  : spec_.vocab_size;
  }

  /** First state id at depth d (d in 0..T-1). */
  std::int64_t level_begin(std::int32_t d) const { return level_offset_[d]; }
  /** One past the last state id at depth d. */
  std::int64_t level_end(std::int32_t d) const { return level_offset_[d + 1]; }

  std::int32_t depth(StateId s) const {
    std::int32_t d = 0;
    while (level_offset_[d + 1] <= s) ++d;
    return d;
  }

  bool is_last_depth(StateId s) const { return s >= level_offset_[spec_.max_len - 1]; }

  /** Child reached by vocabulary token y; requires depth(s) < T-1. */
  StateId child(StateId s, TokenId y) const {
    const std::int32_t d = depth(s);
    return level_offset_[d + 1] + (s - level_offset_[d]) * spec_.vocab_size + y;
  }

  /** Parent of a non-root state. */
  StateId parent(StateId s) const {
    const std::int32_t d = depth(s);
    return level_offset_[d - 1] + (s - level_offset_[d]) / spec_.vocab_size;
  }

  /** Token on the edge from parent(s) to s. */
  TokenId token_from_parent(StateId s) const {
    const std::int32_t d = depth(s);
    return static_cast<TokenId>((s - level_offset_[d]) % spec_.vocab_size);
  }

  friend PrefixTree build_tree(const VocabSpec& spec, std::int64_t state_budget);

 private:
  VocabSpec spec_;
  std::vector<std::int64_t> level_offset_;  // size T+1; [T] == state_count
};

/**
 * Builds the prefix tree for a space, throwing CapacityError when the state
 * count would exceed the budget.
 */
inline PrefixTree build_tree(const VocabSpec& spec,
                             std::int64_t state_budget = default_state_budget()) {
  validate(spec);
  PrefixTree tree;
  tree.spec_ = spec;
  tree.level_offset_.resize(static_cast<std::size_t>(spec.max_len) + 1);
  std::int64_t total = 0;
  std::int64_t level = 1;
  for (std::int32_t d = 0; d < spec.max_len; ++d) {
    tree.level_offset_[d] = total;
    if (level > state_budget - total) {
      throw CapacityError("state count exceeds budget of " +
                          std::to_string(state_budget) + " states");
    }
    total += level;
    if (d + 1 < spec.max_len) {
      if (level > state_budget / spec.vocab_size) {
        throw CapacityError("state count exceeds budget of " +
                            std::to_string(state_budget) + " states");
      }
      level *= spec.vocab_size;
    }
  }
  tree.level_offset_[spec.max_len] = total;
  return tree;
}

/**
 * Number of responses in the space: sum of V^(tau-1) for tau = 1..T in
 * VariableLen mode, V^T in FixedLen mode. Throws CapacityError if the count
 * exceeds the budget.
 */
inline std::int64_t sequence_count(const VocabSpec& spec,
                                   std::int64_t budget = default_state_budget()) {
  validate(spec);
  std::int64_t count = 0;
  std::int64_t level = 1;
  const auto bump = [&](std::int64_t add) {
    if (add > budget - count) {
      throw CapacityError("sequence count exceeds budget of " +
                          std::to_string(budget) + " sequences");
    }
    count += add;
  };
  for (std::int32_t d = 0; d < spec.max_len; ++d) {
    if (spec.mode == LengthMode::kVariableLen) bump(level);
    if (d + 1 < spec.max_len || spec.mode == LengthMode::kFixedLen) {
      if (level > budget / spec.vocab_size) {
        throw CapacityError("sequence count exceeds budget of " +
                            std::to_string(budget) + " sequences");
      }
      level *= spec.vocab_size;
    }
  }
  if (spec.mode == LengthMode::kFixedLen) bump(level);
  return count;
}

/**
 * State reached by following an EOS-free prefix from the root. Throws
 * InvalidSequenceError if the prefix contains EOS or an out-of-range token,
 * or if its length is >= T (no such state).
 */
inline StateId state_of_prefix(const PrefixTree& tree, std::span<const TokenId> prefix) {
  const VocabSpec& spec = tree.spec();
  if (static_cast<std::int64_t>(prefix.size()) >= spec.max_len) {
    throw InvalidSequenceError("prefix " + detail::token_list(prefix) +
                               " has length >= max_len; no such state");
  }
  StateId s = tree.root();
  for (TokenId y : prefix) {
    if (y < 0 || y >= spec.vocab_size) {
      throw InvalidSequenceError("prefix " + detail::token_list(prefix) +
                                 " contains non-vocabulary token " + std::to_string(y));
    }
    s = tree.child(s, y);
  }
  return s;
}

/** Prefix spelled by a state, root first. */
inline Sequence prefix_of_state(const PrefixTree& tree, StateId s) {
  Sequence out;
  while (s != tree.root()) {
    out.push_back(tree.token_from_parent(s));
    s = tree.parent(s);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

/** Throws InvalidSequenceError unless y is a well-formed response. */
inline void validate_sequence(const VocabSpec& spec, std::span<const TokenId> y) {
  validate(spec);
  if (spec.mode == LengthMode::kVariableLen) {
    if (y.empty() || static_cast<std::int64_t>(y.size()) > spec.max_len) {
      throw InvalidSequenceError("sequence " + detail::token_list(y) +
                                 " has invalid length for max_len " +
                                 std::to_string(spec.max_len));
    }
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
      if (y[i] < 0 || y[i] >= spec.vocab_size) {
        throw InvalidSequenceError("sequence " + detail::token_list(y) +
                                   " has non-vocabulary token before EOS");
      }
    }
    if (y.back() != spec.eos_id()) {
      throw InvalidSequenceError("sequence " + detail::token_list(y) +
                                 " does not end with EOS (" +
                                 std::to_string(spec.eos_id()) + ")");
    }
  } else {
    if (static_cast<std::int64_t>(y.size()) != spec.max_len) {
      throw InvalidSequenceError("sequence " + detail::token_list(y) +
                                 " must have exactly max_len tokens");
    }
    for (TokenId t : y) {
      if (t < 0 || t >= spec.vocab_size) {
        throw InvalidSequenceError("sequence " + detail::token_list(y) +
                                   " has out-of-range token " + std::to_string(t));
      }
    }
  }
}

/**
 * Canonical id of a response. VariableLen: ids follow the BFS state order of
 * the EOS-free prefix (length-then-lexicographic). FixedLen: base-V value of
 * the token string (lexicographic).
 */
inline SeqId sequence_id(const PrefixTree& tree, std::span<const TokenId> y) {
  const VocabSpec& spec = tree.spec();
  validate_sequence(spec, y);
  if (spec.mode == LengthMode::kVariableLen) {
    return state_of_prefix(tree, y.subspan(0, y.size() - 1));
  }
  SeqId id = 0;
  for (TokenId t : y) id = id * spec.vocab_size + t;
  return id;
}

/** Inverse of sequence_id. */
inline Sequence sequence_from_id(const PrefixTree& tree, SeqId id) {
  const VocabSpec& spec = tree.spec();
  if (spec.mode == LengthMode::kVariableLen) {
    if (id < 0 || id >= tree.state_count()) {
      throw InvalidSequenceError("sequence id " + std::to_string(id) + " out of range");
    }
    Sequence y = prefix_of_state(tree, id);
    y.push_back(spec.eos_id());
    return y;
  }
  const std::int64_t count = sequence_count(spec);
  if (id < 0 || id >= count) {
    throw InvalidSequenceError("sequence id " + std::to_string(id) + " out of range");
  }
  Sequence y(static_cast<std::size_t>(spec.max_len));
  for (std::int32_t t = spec.max_len - 1; t >= 0; --t) {
    y[static_cast<std::size_t>(t)] = static_cast<TokenId>(id % spec.vocab_size);
    id /= spec.vocab_size;
  }
  return y;
}

/**
 * Visits every response in canonical order: length-then-lexicographic in
 * VariableLen mode, lexicographic in FixedLen mode. fn receives (SeqId,
 * const Sequence&); the sequence buffer is reused between calls.
 */
template <class Fn>
inline void for_each_sequence(const PrefixTree& tree, Fn&& fn,
                              std::int64_t budget = default_state_budget()) {
  const VocabSpec& spec = tree.spec();
  const std::int64_t count = sequence_count(spec, budget);
  Sequence y;
  if (spec.mode == LengthMode::kVariableLen) {
    for (SeqId id = 0; id < count; ++id) {
      y = prefix_of_state(tree, id);
      y.push_back(spec.eos_id());
      fn(id, static_cast<const Sequence&>(y));
    }
  } else {
    y.assign(static_cast<std::size_t>(spec.max_len), 0);
    for (SeqId id = 0; id < count; ++id) {
      fn(id, static_cast<const Sequence&>(y));
      for (std::int32_t t = spec.max_len - 1; t >= 0; --t) {
        if (++y[static_cast<std::size_t>(t)] < spec.vocab_size) break;
        y[static_cast<std::size_t>(t)] = 0;
      }
    }
  }
}

/** Materialized canonical enumeration of the whole response space. */
inline std::vector<Sequence> enumerate_sequences(const VocabSpec& spec,
                                                 std::int64_t budget = default_state_budget()) {
  const PrefixTree tree = build_tree(spec, budget);
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(sequence_count(spec, budget)));
  for_each_sequence(tree, [&](SeqId, const Sequence& y) { out.push_back(y); }, budget);
  return out;
}

/**
 * Walks the scored edges of a response in order, calling fn(state, action)
 * for each step: tau states for a length-tau VariableLen response (the last
 * action is EOS), T states in FixedLen mode.
 */
template <class Fn>
inline void fold_path(const PrefixTree& tree, std::span<const TokenId> y, Fn&& fn) {
  const VocabSpec& spec = tree.spec();
  validate_sequence(spec, y);
  StateId s = tree.root();
  for (std::size_t t = 0; t < y.size(); ++t) {
    fn(s, y[t]);
    const bool last = t + 1 == y.size();
    if (!last) s = tree.child(s, y[t]);
  }
}

}  // namespace softseq
