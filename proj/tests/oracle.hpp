#pragma once

/**
 * Independent reference implementations used to check the library. Everything
 * here is written the slow, obvious way: recursive enumeration, explicit BFS
 * with materialized prefixes, long-double accumulation in the linear domain.
 * Nothing below uses the library's tree arithmetic, log-domain kernels, or
 * dynamic programs; only the token-space value types are shared.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <softseq/seqspace.hpp>

namespace oracle {

using softseq::LengthMode;
using softseq::Sequence;
using softseq::TokenId;
using softseq::VocabSpec;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/** All EOS-free prefixes (length 0..T-1), breadth-first, children in token
 *  order: the canonical state order, derived here by literal BFS. */
inline std::vector<Sequence> bfs_prefixes(const VocabSpec& spec) {
  std::vector<Sequence> out{Sequence{}};
  std::size_t level_begin = 0;
  for (std::int32_t len = 1; len < spec.max_len; ++len) {
    const std::size_t level_end = out.size();
    for (std::size_t i = level_begin; i < level_end; ++i) {
      for (TokenId t = 0; t < spec.vocab_size; ++t) {
        Sequence next = out[i];
        next.push_back(t);
        out.push_back(std::move(next));
      }
    }
    level_begin = level_end;
  }
  return out;
}

/** Every response in canonical order: BFS prefix + EOS in VariableLen mode,
 *  lexicographic recursion in FixedLen mode. */
inline std::vector<Sequence> all_responses(const VocabSpec& spec) {
  std::vector<Sequence> out;
  if (spec.mode == LengthMode::kVariableLen) {
    for (Sequence p : bfs_prefixes(spec)) {
      p.push_back(spec.eos_id());
      out.push_back(std::move(p));
    }
    return out;
  }
  Sequence cur;
  const std::function<void()> rec = [&] {
    if (static_cast<std::int32_t>(cur.size()) == spec.max_len) {
      out.push_back(cur);
      return;
    }
    for (TokenId t = 0; t < spec.vocab_size; ++t) {
      cur.push_back(t);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

/** Actions available from any non-final state, EOS listed last. */
inline std::vector<TokenId> actions(const VocabSpec& spec) {
  std::vector<TokenId> out;
  for (TokenId t = 0; t < spec.vocab_size; ++t) out.push_back(t);
  if (spec.mode == LengthMode::kVariableLen) out.push_back(spec.eos_id());
  return out;
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  long double acc = 0.0L;
  for (double x : xs) {
    if (x > -kInf) acc += std::exp(static_cast<long double>(x) - m);
  }
  return m + static_cast<double>(std::log(acc));
}

/** Score of a whole response; edge scores are looked up by (prefix, action). */
using EdgeFn = std::function<double(const Sequence& prefix, TokenId action)>;

inline double path_sum(const EdgeFn& edge, const Sequence& y) {
  double total = 0.0;
  Sequence prefix;
  for (TokenId t : y) {
    total += edge(prefix, t);
    prefix.push_back(t);
  }
  return total;
}

/** log sum over all responses of exp(score), by enumeration. */
inline double log_partition(const VocabSpec& spec,
                            const std::function<double(const Sequence&)>& score) {
  std::vector<double> scores;
  for (const Sequence& y : all_responses(spec)) scores.push_back(score(y));
  return log_sum_exp(scores);
}

/** Soft value of a prefix: log sum over all completions of the remaining
 *  score, computed by direct recursion over extensions. */
inline double soft_value(const VocabSpec& spec, const EdgeFn& edge, const Sequence& prefix) {
  const std::int32_t d = static_cast<std::int32_t>(prefix.size());
  std::vector<double> parts;
  if (spec.mode == LengthMode::kVariableLen) {
    parts.push_back(edge(prefix, spec.eos_id()));
    if (d < spec.max_len - 1) {
      for (TokenId t = 0; t < spec.vocab_size; ++t) {
        Sequence next = prefix;
        next.push_back(t);
        parts.push_back(edge(prefix, t) + soft_value(spec, edge, next));
      }
    }
  } else {
    for (TokenId t = 0; t < spec.vocab_size; ++t) {
      if (d == spec.max_len - 1) {
        parts.push_back(edge(prefix, t));
      } else {
        Sequence next = prefix;
        next.push_back(t);
        parts.push_back(edge(prefix, t) + soft_value(spec, edge, next));
      }
    }
  }
  return log_sum_exp(parts);
}

/** Tie order for argmax: EOS before every vocabulary token, then token id. */
inline int tie_rank(const VocabSpec& spec, TokenId t) {
  return t == spec.eos_id() ? -1 : static_cast<int>(t);
}

inline bool lex_less(const VocabSpec& spec, const Sequence& a, const Sequence& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (tie_rank(spec, a[i]) != tie_rank(spec, b[i])) {
      return tie_rank(spec, a[i]) < tie_rank(spec, b[i]);
    }
  }
  return a.size() < b.size();
}

/** Exhaustive argmax: highest score, ties broken toward the lex-least
 *  response under the EOS-first order. */
inline Sequence best_response(const VocabSpec& spec,
                              const std::function<double(const Sequence&)>& score,
                              double* best_score = nullptr) {
  Sequence best;
  double value = -kInf;
  bool first = true;
  for (const Sequence& y : all_responses(spec)) {
    const double s = score(y);
    if (first || s > value || (s == value && lex_less(spec, y, best))) {
      best = y;
      value = s;
      first = false;
    }
  }
  if (best_score) *best_score = value;
  return best;
}

/** Central finite differences of a scalar function of a flat vector.
 *  Coordinates held at -inf stay at -inf under the perturbation, so their
 *  difference quotient is exactly zero. */
inline std::vector<double> finite_diff(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-5) {
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

inline bool starts_with(const Sequence& y, const Sequence& prefix) {
  if (prefix.size() > y.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (y[i] != prefix[i]) return false;
  }
  return true;
}

/** Total probability of responses extending a prefix, by direct summation. */
inline double prefix_mass(const std::vector<Sequence>& ys, const std::vector<double>& probs,
                          const Sequence& prefix) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (starts_with(ys[i], prefix)) total += probs[i];
  }
  return static_cast<double>(total);
}

/** Probability of a response under per-step logits: the product over steps of
 *  the row-normalized exponentials, in the linear domain. */
inline double arm_prob(const VocabSpec& spec, const EdgeFn& logit, const Sequence& y) {
  long double prob = 1.0L;
  Sequence prefix;
  for (TokenId t : y) {
    std::vector<double> row;
    for (TokenId a : actions(spec)) row.push_back(logit(prefix, a));
    const double norm = log_sum_exp(row);
    prob *= std::exp(static_cast<long double>(logit(prefix, t)) - norm);
    prefix.push_back(t);
  }
  return static_cast<double>(prob);
}

inline std::vector<double> softargmax(const std::vector<double>& f) {
  const double norm = log_sum_exp(f);
  std::vector<double> p(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    p[i] = f[i] == -kInf ? 0.0 : std::exp(f[i] - norm);
  }
  return p;
}

inline double entropy(const std::vector<double>& p) {
  long double h = 0.0L;
  for (double v : p) {
    if (v > 0.0) h -= static_cast<long double>(v) * std::log(static_cast<long double>(v));
  }
  return static_cast<double>(h);
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  long double d = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    d += static_cast<long double>(p[i]) * (std::log(static_cast<long double>(p[i])) -
                                           std::log(static_cast<long double>(q[i])));
  }
  return static_cast<double>(d);
}

/** Pearson statistic against expected counts n * probs[i]. */
inline double chi_square_stat(const std::vector<std::int64_t>& counts,
                              const std::vector<double>& probs, std::int64_t n) {
  long double stat = 0.0L;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const long double expected = static_cast<long double>(n) * probs[i];
    const long double diff = static_cast<long double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  return static_cast<double>(stat);
}

}  // namespace oracle
