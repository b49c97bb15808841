#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softseq/arm.hpp"
#include "softseq/bijection.hpp"
#include "softseq/dist.hpp"
#include "softseq/ebm.hpp"
#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/random.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/table.hpp"

namespace softseq {

enum class TargetKind { kZipfian, kNormalSoftargmax, kExplicit };

/** Target distribution for function-space training, realized exactly. */
struct DataDistribution {
  TargetKind kind = TargetKind::kExplicit;
  double param = 0.0;  // Zipf exponent or softargmax temperature
  SeqDistribution realized;
};

/**
 * Zipfian target over canonical sequence ids: probability of the rank-k
 * response (k = id + 1) proportional to k^-exponent.
 */
inline DataDistribution make_zipfian(const VocabSpec& spec, double exponent,
                                     std::int64_t budget = default_state_budget()) {
  if (!(exponent > 0.0)) throw SchemaError("zipfian exponent must be > 0");
  const std::int64_t count = sequence_count(spec, budget);
  std::vector<double> logp(static_cast<std::size_t>(count));
  for (std::int64_t k = 1; k <= count; ++k) {
    logp[static_cast<std::size_t>(k - 1)] = -exponent * std::log(static_cast<double>(k));
  }
  const double total = log_sum_exp(logp);
  for (double& v : logp) v -= total;
  return DataDistribution{TargetKind::kZipfian, exponent,
                          SeqDistribution{spec, std::move(logp)}};
}

/**
 * Softargmax of iid standard normal scores at the given temperature:
 * rho = softargmax(z / t). Large t approaches uniform, small t approaches a
 * one-hot vector on the argmax score.
 */
inline DataDistribution make_normal_softargmax(const VocabSpec& spec, double temperature,
                                               RandomStream rng,
                                               std::int64_t budget = default_state_budget()) {
  if (!(temperature > 0.0)) throw SchemaError("softargmax temperature must be > 0");
  const std::int64_t count = sequence_count(spec, budget);
  std::vector<double> logp(static_cast<std::size_t>(count));
  for (double& v : logp) v = rng.next_gaussian() / temperature;
  const double total = log_sum_exp(logp);
  for (double& v : logp) v -= total;
  return DataDistribution{TargetKind::kNormalSoftargmax, temperature,
                          SeqDistribution{spec, std::move(logp)}};
}

/** Wraps an explicit distribution as a training target. */
inline DataDistribution make_explicit(SeqDistribution p) {
  return DataDistribution{TargetKind::kExplicit, 0.0, std::move(p)};
}

/** The optimal expected risk: the entropy of the target. Both model
 *  families attain it exactly in function space. */
inline double min_risk(const DataDistribution& rho) {
  return entropy_exact(rho.realized);
}

/**
 * Exact expected Gibbs risk in the per-sequence score parameterization:
 * logsumexp(scores) - E_rho[scores]. Its gap above min_risk is KL(rho ||
 * softargmax(scores)).
 */
inline double expected_risk_ebm(std::span<const double> scores, const SeqDistribution& rho) {
  if (scores.size() != rho.logp.size()) throw SchemaError("score table has wrong length");
  double risk = log_sum_exp(scores);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::exp(rho.logp[i]);
    if (p > 0.0) risk -= p * scores[i];
  }
  return risk;
}

/** Gradient of expected_risk_ebm: softargmax(scores) - rho. */
inline std::vector<double> grad_expected_risk_ebm(std::span<const double> scores,
                                                  const SeqDistribution& rho) {
  if (scores.size() != rho.logp.size()) throw SchemaError("score table has wrong length");
  const double total = log_sum_exp(scores);
  std::vector<double> g(scores.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::exp(scores[i] - total) - std::exp(rho.logp[i]);
  }
  return g;
}

namespace detail {

/** Row sums of an edge-mass table: reach probability of each state. */
inline std::vector<double> reach_mass(const MarginalTable& g) {
  std::vector<double> w(static_cast<std::size_t>(g.tree.state_count()), 0.0);
  for (StateId s = 0; s < g.tree.state_count(); ++s) {
    for (TokenId a = 0; a < g.tree.num_actions(); ++a) w[static_cast<std::size_t>(s)] += g.at(s, a);
  }
  return w;
}

/** Teacher-forcing risk from precomputed edge masses: sum_s w(s) V_q(s) -
 *  sum_(s,a) G(s,a) q(s,a). */
inline double arm_risk_from_masses(const PrefixTree& tree, std::span<const double> q,
                                   const MarginalTable& g, std::span<const double> w) {
  const std::int32_t num_actions = tree.num_actions();
  double risk = 0.0;
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const double ws = w[static_cast<std::size_t>(s)];
    if (ws == 0.0) continue;
    const std::size_t base = static_cast<std::size_t>(s * num_actions);
    risk += ws * log_sum_exp(q.subspan(base, static_cast<std::size_t>(num_actions)));
    for (TokenId a = 0; a < num_actions; ++a) {
      const double mass = g.at(s, a);
      if (mass > 0.0) risk -= mass * q[base + static_cast<std::size_t>(a)];
    }
  }
  return risk;
}

/** Gradient of the teacher-forcing risk: w(s) pi_q(a | s) - G(s, a). Zero at
 *  every slot of an unreached state and at enforced terminal slots. */
inline void arm_grad_from_masses(const PrefixTree& tree, std::span<const double> q,
                                 const MarginalTable& g, std::span<const double> w,
                                 std::vector<double>& out) {
  out.assign(q.size(), 0.0);
  const std::int32_t num_actions = tree.num_actions();
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const double ws = w[static_cast<std::size_t>(s)];
    if (ws == 0.0) continue;
    const std::size_t base = static_cast<std::size_t>(s * num_actions);
    const double v = log_sum_exp(q.subspan(base, static_cast<std::size_t>(num_actions)));
    for (TokenId a = 0; a < num_actions; ++a) {
      const double lq = q[base + static_cast<std::size_t>(a)];
      const double pi = lq == kNegInf ? 0.0 : std::exp(lq - v);
      out[base + static_cast<std::size_t>(a)] = ws * pi - g.at(s, a);
    }
  }
}

}  // namespace detail

/**
 * Exact expected teacher-forcing risk E_rho[nll_arm(q, y)], evaluated via
 * the target's edge visit masses. Its gap above min_risk is KL(rho ||
 * arm_dist(q)) for valid q.
 */
inline double expected_risk_arm(const LogitTable& q, const SeqDistribution& rho,
                                std::int64_t budget = default_state_budget()) {
  const MarginalTable g = edge_visit_mass(rho, q.tree, budget);
  return detail::arm_risk_from_masses(q.tree, q.values, g, detail::reach_mass(g));
}

/** Gradient of expected_risk_arm over the full table. */
inline std::vector<double> grad_expected_risk_arm(const LogitTable& q,
                                                  const SeqDistribution& rho,
                                                  std::int64_t budget = default_state_budget()) {
  const MarginalTable g = edge_visit_mass(rho, q.tree, budget);
  std::vector<double> out;
  detail::arm_grad_from_masses(q.tree, q.values, g, detail::reach_mass(g), out);
  return out;
}

enum class InitKind { kZeros, kSeeded };

struct InitSpec {
  InitKind kind = InitKind::kZeros;
  double scale = 0.0;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  double step_size = 4.0;
  std::int64_t max_steps = 200'000;
  double gap_tolerance = 1e-6;  // stop once risk - min_risk falls below
  std::int64_t eval_every = 1'000;
  InitSpec init;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw SchemaError("step_size must be > 0");
  if (cfg.max_steps < 0) throw SchemaError("max_steps must be >= 0");
  if (!(cfg.gap_tolerance >= 0.0)) throw SchemaError("gap_tolerance must be >= 0");
  if (cfg.eval_every < 1) throw SchemaError("eval_every must be >= 1");
}

struct RunRow {
  std::int64_t step = 0;
  double risk = 0.0;
  double gap = 0.0;
  double dist_before = kNaN;
  double dist_after = kNaN;
};

using RunRecord = std::vector<RunRow>;

namespace detail {

/**
 * Full-batch gradient descent with step halving: a candidate step that
 * raises the risk above ten times its initial value raises DivergenceError;
 * a milder increase halves the step size and retries, so accepted risks are
 * monotone nonincreasing. Stops at gap_tolerance, max_steps, or when the
 * step size underflows (no further progress representable).
 */
struct DescentResult {
  std::vector<double> x;
  double risk = 0.0;
  std::int64_t steps = 0;
  double step_size = 0.0;
  RunRecord record;
};

template <class RiskFn, class GradFn, class DistFn>
DescentResult descend(std::vector<double> x0, const TrainConfig& cfg, double floor,
                      RiskFn&& risk_of, GradFn&& grad_of, DistFn&& distances) {
  validate(cfg);
  DescentResult d;
  d.x = std::move(x0);
  d.step_size = cfg.step_size;
  d.risk = risk_of(d.x);
  const double initial_risk = d.risk;
  std::int64_t last_emit = -1;
  const auto emit = [&](std::int64_t step) {
    const std::pair<double, double> dist = distances(d.x);
    d.record.push_back(RunRow{step, d.risk, d.risk - floor, dist.first, dist.second});
    last_emit = step;
  };
  emit(0);
  std::vector<double> grad;
  std::vector<double> candidate(d.x.size());
  while (d.steps < cfg.max_steps && d.risk - floor > cfg.gap_tolerance) {
    grad_of(d.x, grad);
    bool stalled = false;
    for (;;) {
      for (std::size_t i = 0; i < d.x.size(); ++i) {
        candidate[i] = d.x[i] - d.step_size * grad[i];
      }
      const double crisk = risk_of(candidate);
      if (!(crisk <= 10.0 * initial_risk)) {
        throw DivergenceError("risk " + std::to_string(crisk) +
                              " exceeds 10x its initial value " +
                              std::to_string(initial_risk) + "; step size too large");
      }
      if (crisk > d.risk) {
        d.step_size *= 0.5;
        if (!(d.step_size > cfg.step_size * 0x1p-80)) {
          stalled = true;
          break;
        }
        continue;
      }
      d.x.swap(candidate);
      d.risk = crisk;
      break;
    }
    if (stalled) break;
    d.steps += 1;
    if (d.steps % cfg.eval_every == 0) emit(d.steps);
  }
  if (last_emit != d.steps) emit(d.steps);
  return d;
}

}  // namespace detail

struct EbmTrainResult {
  std::vector<double> scores;  // trained per-sequence log-scores
  RewardTable r;               // scores installed as edge rewards
  RunRecord record;
  double final_risk = 0.0;
  double optimality_gap = 0.0;
  std::int64_t steps = 0;
  double step_size_final = 0.0;
};

/**
 * Function-space Gibbs training: full-batch GD on the exact expected risk
 * in the per-sequence score parameterization (terminal lifting makes the
 * two parameterizations identical). Converges to softargmax(scores) = rho.
 */
inline EbmTrainResult train_ebm(const DataDistribution& rho, const TrainConfig& cfg,
                                const PrefixTree& tree,
                                [[maybe_unused]] std::int64_t budget = default_state_budget()) {
  if (!(rho.realized.space == tree.spec())) throw SchemaError("target space mismatch");
  const std::size_t n = rho.realized.logp.size();
  std::vector<double> x0(n, 0.0);
  if (cfg.init.kind == InitKind::kSeeded) {
    RandomStream rng(cfg.init.seed);
    for (double& v : x0) v = cfg.init.scale * rng.next_gaussian();
  }
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = std::exp(rho.realized.logp[i]);
  const double floor = min_risk(rho);
  const auto risk_of = [&](const std::vector<double>& x) {
    double risk = log_sum_exp(x);
    for (std::size_t i = 0; i < n; ++i) {
      if (probs[i] > 0.0) risk -= probs[i] * x[i];
    }
    return risk;
  };
  const auto grad_of = [&](const std::vector<double>& x, std::vector<double>& g) {
    const double total = log_sum_exp(x);
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(x[i] - total) - probs[i];
  };
  const auto distances = [](const std::vector<double>&) {
    return std::pair<double, double>{kNaN, kNaN};
  };
  auto d = detail::descend(std::move(x0), cfg, floor, risk_of, grad_of, distances);
  EbmTrainResult out;
  out.scores = std::move(d.x);
  out.r = rewards_from_sequence_scores(tree, out.scores);
  out.record = std::move(d.record);
  out.final_risk = d.risk;
  out.optimality_gap = d.risk - floor;
  out.steps = d.steps;
  out.step_size_final = d.step_size;
  return out;
}

/** Max-norm distance between mean-centered sequence-level logits: centers
 *  the path scores of q and the reference scores over sequences. */
inline double logits_distance_before(const LogitTable& q, std::span<const double> ref_scores,
                                     std::int64_t budget = default_state_budget()) {
  const std::int64_t count = sequence_count(q.tree.spec(), budget);
  if (static_cast<std::int64_t>(ref_scores.size()) != count) {
    throw SchemaError("reference score table has wrong length");
  }
  std::vector<double> bar(static_cast<std::size_t>(count));
  for_each_sequence(
      q.tree,
      [&](SeqId id, const Sequence& y) { bar[static_cast<std::size_t>(id)] = path_score(q, y); },
      budget);
  return linf_diff(center_finite(bar), center_finite(ref_scores));
}

/** Max over states of the max-norm distance between row-centered logits
 *  (centering skips -inf slots; a -inf pattern mismatch gives +inf). */
inline double logits_rows_distance(const LogitTable& a, const LogitTable& b) {
  if (!(a.tree.spec() == b.tree.spec())) throw SchemaError("tables live on different spaces");
  double worst = 0.0;
  for (StateId s = 0; s < a.tree.state_count(); ++s) {
    worst = std::max(worst, linf_diff(center_finite(a.row(s)), center_finite(b.row(s))));
    if (worst == kPosInf) break;
  }
  return worst;
}

/** Row-centered distance between q and the exact logits of r_star. */
inline double logits_distance_after(const LogitTable& q, const RewardTable& r_star) {
  return logits_rows_distance(q, map_r_to_q(r_star));
}

struct ArmTrainResult {
  LogitTable q;
  RunRecord record;
  double final_risk = 0.0;
  double optimality_gap = 0.0;
  std::int64_t steps = 0;
  double step_size_final = 0.0;
};

/**
 * Function-space softargmax training: full-batch GD on the exact expected
 * teacher-forcing risk. Free parameters are the structural slots; in
 * VariableLen mode depth T-1 rows are terminal-enforced at initialization
 * and their gradient vanishes identically, so they stay enforced. When a
 * reference reward table is given (the trained Gibbs optimum), every record
 * row carries the sequence-level and row-level logit distances to it.
 */
inline ArmTrainResult train_arm(const DataDistribution& rho, const TrainConfig& cfg,
                                const PrefixTree& tree, const RewardTable* reference = nullptr,
                                std::int64_t budget = default_state_budget()) {
  if (!(rho.realized.space == tree.spec())) throw SchemaError("target space mismatch");
  const MarginalTable g = edge_visit_mass(rho.realized, tree, budget);
  const std::vector<double> w = detail::reach_mass(g);
  LogitTable shape = enforce_terminal(make_table<LogitTag>(tree, 0.0));
  if (cfg.init.kind == InitKind::kSeeded) {
    RandomStream rng(cfg.init.seed);
    for (StateId s = 0; s < tree.state_count(); ++s) {
      if (tree.spec().mode == LengthMode::kVariableLen && tree.is_last_depth(s)) continue;
      for (TokenId a = 0; a < tree.num_actions(); ++a) {
        shape.at(s, a) = cfg.init.scale * rng.next_gaussian();
      }
    }
  }
  const double floor = min_risk(rho);
  const auto risk_of = [&](const std::vector<double>& x) {
    return detail::arm_risk_from_masses(tree, x, g, w);
  };
  const auto grad_of = [&](const std::vector<double>& x, std::vector<double>& out) {
    detail::arm_grad_from_masses(tree, x, g, w, out);
  };
  std::vector<double> ref_scores;
  LogitTable ref_logits;
  if (reference != nullptr) {
    const std::int64_t count = sequence_count(tree.spec(), budget);
    ref_scores.resize(static_cast<std::size_t>(count));
    for_each_sequence(
        tree,
        [&](SeqId id, const Sequence& y) {
          ref_scores[static_cast<std::size_t>(id)] = score_R(*reference, y);
        },
        budget);
    ref_logits = map_r_to_q(*reference);
  }
  LogitTable view{tree, {}};
  const auto distances = [&](const std::vector<double>& x) {
    if (reference == nullptr) return std::pair<double, double>{kNaN, kNaN};
    view.values = x;
    const double before = logits_distance_before(view, ref_scores, budget);
    const double after = logits_rows_distance(view, ref_logits);
    view.values.clear();
    return std::pair<double, double>{before, after};
  };
  auto d = detail::descend(std::move(shape.values), cfg, floor, risk_of, grad_of, distances);
  ArmTrainResult out;
  out.q = LogitTable{tree, std::move(d.x)};
  out.record = std::move(d.record);
  out.final_risk = d.risk;
  out.optimality_gap = d.risk - floor;
  out.steps = d.steps;
  out.step_size_final = d.step_size;
  return out;
}

/** The trained softargmax model as an exact sequence distribution. */
inline SeqDistribution reconstruct_pstar(const LogitTable& q,
                                         std::int64_t budget = default_state_budget()) {
  return arm_dist(q, budget);
}

}  // namespace softseq
