#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softseq/arm.hpp"
#include "softseq/dist.hpp"
#include "softseq/ebm.hpp"
#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/table.hpp"

namespace softseq {

/**
 * Exact reward-to-logit map: one bottom-up sweep assigning q(s, EOS) =
 * r(s, EOS) and q(s, y) = r(s, y) + V_q(child(s, y)). The resulting
 * softargmax model reproduces the Gibbs distribution of r edge for edge and
 * its root soft value is the log-partition. Infeasible (-inf) reward edges
 * map to -inf logits; in VariableLen mode the horizon-invalid vocabulary
 * slots at depth T-1 stay -inf, which is exactly terminal enforcement.
 */
inline LogitTable map_r_to_q(const RewardTable& r) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  LogitTable q = make_table<LogitTag>(tree, kNegInf);
  std::vector<double> value(static_cast<std::size_t>(tree.state_count()), kNegInf);
  for (StateId s = tree.state_count() - 1; s >= 0; --s) {
    const bool last = tree.is_last_depth(s);
    if (spec.mode == LengthMode::kVariableLen) {
      q.at(s, spec.eos_id()) = r.at(s, spec.eos_id());
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          q.at(s, y) = r.at(s, y) + value[static_cast<std::size_t>(tree.child(s, y))];
        }
      }
    } else {
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        q.at(s, y) = last ? r.at(s, y)
                          : r.at(s, y) + value[static_cast<std::size_t>(tree.child(s, y))];
      }
    }
    value[static_cast<std::size_t>(s)] = log_sum_exp(q.row(s));
  }
  return q;
}

/**
 * Exact inverse of map_r_to_q: r(s, EOS) = q(s, EOS) and r(s, y) = q(s, y) -
 * V_q(child(s, y)), a single parallel pass given the value table. A -inf
 * logit maps back to a -inf reward regardless of the child value (that slot
 * carries no mass and the subtraction would otherwise be indeterminate).
 */
inline RewardTable map_q_to_r(const LogitTable& q) {
  const PrefixTree& tree = q.tree;
  const VocabSpec& spec = tree.spec();
  const std::vector<double> value = value_table(q);
  RewardTable r = make_table<RewardTag>(tree, kNegInf);
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const bool last = tree.is_last_depth(s);
    if (spec.mode == LengthMode::kVariableLen) {
      r.at(s, spec.eos_id()) = q.at(s, spec.eos_id());
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          const double lq = q.at(s, y);
          r.at(s, y) = lq == kNegInf
                           ? kNegInf
                           : lq - value[static_cast<std::size_t>(tree.child(s, y))];
        }
      }
    } else {
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        const double lq = q.at(s, y);
        if (last) {
          r.at(s, y) = lq;
        } else {
          r.at(s, y) = lq == kNegInf
                           ? kNegInf
                           : lq - value[static_cast<std::size_t>(tree.child(s, y))];
        }
      }
    }
  }
  return r;
}

struct BijectionReport {
  double max_prob_diff = 0.0;      // max |p_gibbs(y) - p_softargmax(y)|
  double log_partition_diff = 0.0; // |A - V_q(root)|
  double roundtrip_r = 0.0;        // Linf(map_q_to_r(map_r_to_q(r)), r), live edges
  double roundtrip_q = 0.0;        // Linf(map_r_to_q(map_q_to_r(q)), q) at q = map_r_to_q(r)
  double tolerance = 0.0;
  bool pass = false;
};

/**
 * Checks the exact correspondence on one reward table: distribution match,
 * partition match, and both round trips. Edges whose every completion is
 * infeasible are skipped in the r round trip (the map collapses them to
 * -inf and they carry no mass), so tables with -inf edges still verify.
 */
inline BijectionReport verify_bijection(const RewardTable& r, double tol = 1e-9,
                                        std::int64_t budget = default_state_budget()) {
  const LogitTable q = map_r_to_q(r);
  const SeqDistribution pe = ebm_dist(r, budget);
  const SeqDistribution pa = arm_dist(q, budget);
  BijectionReport report;
  report.tolerance = tol;
  for (std::size_t i = 0; i < pe.logp.size(); ++i) {
    report.max_prob_diff = std::max(
        report.max_prob_diff, std::abs(std::exp(pe.logp[i]) - std::exp(pa.logp[i])));
  }
  report.log_partition_diff =
      std::abs(log_partition_bruteforce(r, budget) - value_table(q)[0]);
  const RewardTable back = map_q_to_r(q);
  double rt_r = 0.0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const bool dead = q.values[i] == kNegInf && r.values[i] != kNegInf;
    if (dead) continue;  // no feasible completion; r's value is unrecoverable
    const bool ia = r.values[i] == kNegInf;
    const bool ib = back.values[i] == kNegInf;
    if (ia && ib) continue;
    rt_r = (ia != ib) ? kPosInf : std::max(rt_r, std::abs(r.values[i] - back.values[i]));
    if (rt_r == kPosInf) break;
  }
  report.roundtrip_r = rt_r;
  const LogitTable q_again = map_r_to_q(back);
  report.roundtrip_q = linf_diff(q_again.values, q.values);
  report.pass = report.max_prob_diff < tol && report.log_partition_diff < tol &&
                report.roundtrip_r < tol && report.roundtrip_q < tol;
  return report;
}

/** Reference policy wrapper: the induced logits are the log-conditionals. */
using ReferencePolicy = NextTokenPolicy;

/**
 * Reference-measure variant of map_r_to_q: the residual logits satisfy
 * q(s, EOS) = r(s, EOS) and q(s, y) = r(s, y) + W(child(s, y)) with the
 * modulated value W(s) = logsumexp_a(q(s, a) + q_ref(s, a)), where q_ref is
 * the reference log-conditional. With a uniform reference this reduces to
 * map_r_to_q up to per-state constants; composing residual and reference
 * logits reproduces the Gibbs distribution of r plus the reference rewards.
 */
inline LogitTable map_with_reference(const RewardTable& r, const ReferencePolicy& ref) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  if (!(ref.tree.spec() == spec)) throw SchemaError("reference policy space mismatch");
  LogitTable q = make_table<LogitTag>(tree, kNegInf);
  std::vector<double> wvalue(static_cast<std::size_t>(tree.state_count()), kNegInf);
  std::vector<double> row(static_cast<std::size_t>(tree.num_actions()), kNegInf);
  for (StateId s = tree.state_count() - 1; s >= 0; --s) {
    const bool last = tree.is_last_depth(s);
    if (spec.mode == LengthMode::kVariableLen) {
      q.at(s, spec.eos_id()) = r.at(s, spec.eos_id());
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          q.at(s, y) = r.at(s, y) + wvalue[static_cast<std::size_t>(tree.child(s, y))];
        }
      }
    } else {
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        q.at(s, y) = last ? r.at(s, y)
                          : r.at(s, y) + wvalue[static_cast<std::size_t>(tree.child(s, y))];
      }
    }
    for (TokenId a = 0; a < tree.num_actions(); ++a) {
      const double sum = q.at(s, a) + ref.at(s, a);
      row[static_cast<std::size_t>(a)] = std::isnan(sum) ? kNegInf : sum;
    }
    wvalue[static_cast<std::size_t>(s)] = log_sum_exp(row);
  }
  return q;
}

/** Composite logits residual + reference; its softargmax is the total
 *  next-token model of map_with_reference. */
inline LogitTable total_logits(const LogitTable& residual, const ReferencePolicy& ref) {
  if (!(residual.tree.spec() == ref.tree.spec())) {
    throw SchemaError("reference policy space mismatch");
  }
  LogitTable q = residual;
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    const double sum = q.values[i] + ref.logpi[i];
    q.values[i] = std::isnan(sum) ? kNegInf : sum;
  }
  return q;
}

/** Reference log-conditionals installed as edge rewards (0 on the
 *  structurally invalid slots, like every reward table). */
inline RewardTable reference_rewards(const ReferencePolicy& ref) {
  RewardTable r = zero_rewards(ref.tree);
  for (StateId s = 0; s < ref.tree.state_count(); ++s) {
    for (TokenId a = 0; a < ref.tree.num_actions(); ++a) {
      if (action_valid(ref.tree, s, a)) r.at(s, a) = ref.at(s, a);
    }
  }
  return r;
}

struct ForwardBackward {
  std::vector<double> log_alpha;  // per state: log path weight from the root
  std::vector<double> log_beta;   // per state: log partition of the suffix
  double log_z = kNegInf;
};

/**
 * Sum-product on the prefix tree with potentials exp(r): alpha follows the
 * unique root path (log_alpha(root) = 0), beta aggregates suffix weight
 * bottom-up, and log Z = log_beta(root). log_beta coincides with the soft
 * values of map_r_to_q.
 */
inline ForwardBackward forward_backward(const RewardTable& r) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  ForwardBackward fb;
  fb.log_beta.assign(static_cast<std::size_t>(tree.state_count()), kNegInf);
  for (StateId s = tree.state_count() - 1; s >= 0; --s) {
    const bool last = tree.is_last_depth(s);
    double acc = kNegInf;
    if (spec.mode == LengthMode::kVariableLen) {
      acc = r.at(s, spec.eos_id());  // EOS closes the response: suffix weight 1
      if (!last) {
        for (TokenId y = 0; y < spec.vocab_size; ++y) {
          acc = log_add(acc, r.at(s, y) + fb.log_beta[static_cast<std::size_t>(tree.child(s, y))]);
        }
      }
    } else {
      for (TokenId y = 0; y < spec.vocab_size; ++y) {
        acc = log_add(acc, last ? r.at(s, y)
                                : r.at(s, y) +
                                      fb.log_beta[static_cast<std::size_t>(tree.child(s, y))]);
      }
    }
    fb.log_beta[static_cast<std::size_t>(s)] = acc;
  }
  fb.log_alpha.assign(static_cast<std::size_t>(tree.state_count()), kNegInf);
  fb.log_alpha[0] = 0.0;
  for (StateId s = 1; s < tree.state_count(); ++s) {
    const StateId up = tree.parent(s);
    fb.log_alpha[static_cast<std::size_t>(s)] =
        fb.log_alpha[static_cast<std::size_t>(up)] + r.at(up, tree.token_from_parent(s));
  }
  fb.log_z = fb.log_beta[0];
  return fb;
}

/**
 * Exact prefix marginals G(s, a) = alpha(s) psi(s, a) beta(after a) / Z in
 * linear domain: the Gibbs probability that a response's path uses edge
 * (s, a). Equals the gradient of the log-partition with respect to r, and
 * row sums give each state's reach probability.
 */
inline MarginalTable prefix_marginals(const RewardTable& r) {
  const PrefixTree& tree = r.tree;
  const VocabSpec& spec = tree.spec();
  const ForwardBackward fb = forward_backward(r);
  if (fb.log_z == kNegInf) {
    throw DegenerateError("every response scores -inf; marginals undefined");
  }
  MarginalTable g = make_table<MarginalTag>(tree, 0.0);
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const bool last = tree.is_last_depth(s);
    const double la = fb.log_alpha[static_cast<std::size_t>(s)];
    for (TokenId a = 0; a < tree.num_actions(); ++a) {
      if (!action_valid(tree, s, a)) continue;
      const bool closes = (spec.mode == LengthMode::kVariableLen && a == spec.eos_id()) ||
                          (spec.mode == LengthMode::kFixedLen && last);
      const double suffix =
          closes ? 0.0 : fb.log_beta[static_cast<std::size_t>(tree.child(s, a))];
      const double lg = la + r.at(s, a) + suffix - fb.log_z;
      g.at(s, a) = lg == kNegInf ? 0.0 : std::exp(lg);
    }
  }
  return g;
}

struct ElboResult {
  double bound = 0.0;  // E_{p_q}[R - log p_q]
  double gap = 0.0;    // A - bound = KL(p_q || p_gibbs), always >= 0
};

/**
 * Evidence lower bound of a softargmax model against a reward table,
 * evaluated exactly by enumeration. SupportError if the model puts mass on
 * an infeasible response (the bound would be -inf).
 */
inline ElboResult elbo(const RewardTable& r, const LogitTable& q,
                       std::int64_t budget = default_state_budget()) {
  if (!(r.tree.spec() == q.tree.spec())) throw SchemaError("tables live on different spaces");
  const SeqDistribution pa = arm_dist(q, budget);
  double bound = 0.0;
  for_each_sequence(
      r.tree,
      [&](SeqId id, const Sequence& y) {
        const double lp = pa.logp[static_cast<std::size_t>(id)];
        if (lp == kNegInf) return;
        const double score = score_R(r, y);
        if (score == kNegInf) {
          throw SupportError("softargmax model puts mass on infeasible response id " +
                             std::to_string(id));
        }
        bound += std::exp(lp) * (score - lp);
      },
      budget);
  ElboResult out;
  out.bound = bound;
  out.gap = log_partition_bruteforce(r, budget) - bound;
  return out;
}

struct LemmaCheck {
  double kl = 0.0;
  double bound = 0.0;
};

/**
 * KL(softargmax(f) || softargmax(g)) together with its uniform bound
 * 2 max|f - g| for plain logit vectors of equal length.
 */
inline LemmaCheck softargmax_kl_lemma_check(std::span<const double> f,
                                            std::span<const double> g) {
  if (f.size() != g.size() || f.empty()) {
    throw SchemaError("logit vectors must be nonempty and of equal length");
  }
  const double fz = log_sum_exp(f);
  const double gz = log_sum_exp(g);
  if (fz == kNegInf || gz == kNegInf) {
    throw DegenerateError("all--inf logit vector; softargmax undefined");
  }
  LemmaCheck out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const bool ia = f[i] == kNegInf;
    const bool ib = g[i] == kNegInf;
    if (ia && ib) continue;
    if (ia != ib) {
      if (!ia) out.kl = kPosInf;  // f has mass where g has none
      out.bound = kPosInf;
      if (out.kl == kPosInf) continue;
    } else {
      out.bound = std::max(out.bound, 2.0 * std::abs(f[i] - g[i]));
    }
    if (!ia && out.kl != kPosInf) {
      const double lp = f[i] - fz;
      const double lq = g[i] - gz;
      out.kl += std::exp(lp) * (lp - lq);
    }
  }
  return out;
}

/**
 * Sequence-level bound: exact KL(p_gibbs(r) || p_softargmax(q)) on the left,
 * 2 T max|map_r_to_q(r) - q| over table slots on the right (matching -inf
 * slots contribute nothing; a -inf mismatch makes the bound +inf).
 */
inline LemmaCheck kl_bound_check(const RewardTable& r, const LogitTable& q,
                                 std::int64_t budget = default_state_budget()) {
  if (!(r.tree.spec() == q.tree.spec())) throw SchemaError("tables live on different spaces");
  LemmaCheck out;
  const LogitTable qr = map_r_to_q(r);
  out.bound = 2.0 * static_cast<double>(r.tree.spec().max_len) *
              linf_diff(qr.values, q.values);
  try {
    out.kl = kl_exact(ebm_dist(r, budget), arm_dist(q, budget));
  } catch (const SupportError&) {
    out.kl = kPosInf;  // Gibbs mass on a response the model excludes
  }
  return out;
}

}  // namespace softseq
