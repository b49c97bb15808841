#include <doctest.h>

#include <cmath>
#include <vector>

#include <softseq/softseq.hpp>

#include "helpers.hpp"
#include "oracle.hpp"

using namespace softseq;

TEST_SUITE("arm") {

TEST_CASE("enforce_terminal pins the last depth to EOS") {
  const VocabSpec spec{3, 3, LengthMode::kVariableLen};
  const PrefixTree tree = build_tree(spec);
  RandomStream rng(41);
  const LogitTable q = enforce_terminal(random_logit_table(tree, rng, 1.0));
  for (StateId s = 0; s < tree.state_count(); ++s) {
    if (!tree.is_last_depth(s)) continue;
    CHECK(q.at(s, spec.eos_id()) == 0.0);
    for (TokenId y = 0; y < spec.vocab_size; ++y) CHECK(q.at(s, y) == kNegInf);
  }
  // FixedLen: documented no-op.
  const PrefixTree fix = build_tree(VocabSpec{3, 3, LengthMode::kFixedLen});
  const LogitTable raw = random_logit_table(fix, rng, 1.0);
  CHECK(enforce_terminal(raw).values == raw.values);
}

TEST_CASE("policy_of is the row-wise softargmax") {
  RandomStream rng(42);
  for (const VocabSpec& spec : testutil::small_spaces()) {
    const PrefixTree tree = build_tree(spec);
    const LogitTable q = random_logit_table(tree, rng, 1.5);
    const NextTokenPolicy pi = policy_of(q);
    for (StateId s = 0; s < tree.state_count(); ++s) {
      const std::span<const double> row = q.row(s);
      const std::vector<double> expect =
          oracle::softargmax(std::vector<double>(row.begin(), row.end()));
      for (TokenId a = 0; a < tree.num_actions(); ++a) {
        CHECK(testutil::near(std::exp(pi.at(s, a)), expect[static_cast<std::size_t>(a)],
                             1e-13));
      }
      CHECK(testutil::near(log_sum_exp(pi.row(s)), 0.0, 1e-12));
    }
  }
}

TEST_CASE("an all--inf row is a zero-mass subtree") {
  const PrefixTree tree = build_tree(VocabSpec{2, 2, LengthMode::kFixedLen});
  LogitTable q = make_table<LogitTag>(tree, 0.0);
  q.at(1, 0) = kNegInf;  // state 1 = prefix (0): no continuation at all
  q.at(1, 1) = kNegInf;
  const NextTokenPolicy pi = policy_of(q);
  CHECK(pi.at(1, 0) == kNegInf);
  CHECK(pi.at(1, 1) == kNegInf);
  // The edge into the dead subtree is still finite here, so half the mass
  // vanishes: an inconsistent table that arm_dist must reject.
  CHECK_THROWS_AS(arm_dist(q), ValidityError);
  // Teacher forcing an excluded response reports +inf, not NaN.
  CHECK(nll_arm(q, Sequence{0, 1}) == kPosInf);
  CHECK(std::isfinite(nll_arm(q, Sequence{1, 1})));
}

TEST_CASE("enforced tables are exact distributions; unenforced ones leak") {
  RandomStream rng(43);
  const VocabSpec spec{3, 3, LengthMode::kVariableLen};
  const PrefixTree tree = build_tree(spec);
  int leaks = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const LogitTable raw = random_logit_table(tree, rng, 1.0);
    const SeqDistribution p = arm_dist(enforce_terminal(raw));
    CHECK(testutil::near(log_sum_exp(p.logp), 0.0, 1e-12));
    try {
      (void)arm_dist(raw);
    } catch (const ValidityError&) {
      ++leaks;
    }
  }
  // A generic random table always loses mass past the horizon.
  CHECK(leaks == 25);
  // FixedLen tables need no enforcement to normalize.
  const PrefixTree fix = build_tree(VocabSpec{3, 3, LengthMode::kFixedLen});
  const SeqDistribution pf = arm_dist(random_logit_table(fix, rng, 1.0));
  CHECK(testutil::near(log_sum_exp(pf.logp), 0.0, 1e-12));
}

TEST_CASE("arm_dist equals the oracle per-step product") {
  RandomStream rng(44);
  for (const VocabSpec& spec : testutil::small_spaces()) {
    const PrefixTree tree = build_tree(spec);
    const LogitTable q = enforce_terminal(random_logit_table(tree, rng, 1.2));
    const SeqDistribution p = arm_dist(q);
    const oracle::EdgeFn logit = testutil::edge_fn(q);
    const std::vector<Sequence> ys = oracle::all_responses(spec);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      CHECK(testutil::near(p.prob(static_cast<SeqId>(i)),
                           oracle::arm_prob(spec, logit, ys[i]), 1e-13));
    }
  }
}

TEST_CASE("nll_arm = path_partition - path_score, teacher forcing") {
  RandomStream rng(45);
  for (const VocabSpec& spec : testutil::small_spaces()) {
    const PrefixTree tree = build_tree(spec);
    const LogitTable q = enforce_terminal(random_logit_table(tree, rng, 1.0));
    const SeqDistribution p = arm_dist(q);
    for_each_sequence(tree, [&](SeqId id, const Sequence& y) {
      const double nll = nll_arm(q, y);
      CHECK(testutil::near(nll, path_partition(q, y) - path_score(q, y), 1e-11));
      CHECK(testutil::near(nll, -p.logp[static_cast<std::size_t>(id)], 1e-11));
    });
  }
}

TEST_CASE("path quantities also exist for unenforced tables") {
  // nll_arm is well-defined teacher forcing even when the model leaks mass;
  // exp(-nll) then underestimates nothing per step, it just fails to sum to
  // one over the response space.
  const VocabSpec spec{2, 2, LengthMode::kVariableLen};
  const PrefixTree tree = build_tree(spec);
  RandomStream rng(46);
  const LogitTable q = random_logit_table(tree, rng, 1.0);
  double mass = 0.0;
  for_each_sequence(tree, [&](SeqId, const Sequence& y) { mass += std::exp(-nll_arm(q, y)); });
  CHECK(mass < 1.0 - 1e-6);
}

TEST_CASE("grad_path_partition is the softargmax row on path states only") {
  RandomStream rng(47);
  const VocabSpec spec{3, 3, LengthMode::kVariableLen};
  const PrefixTree tree = build_tree(spec);
  const LogitTable q = enforce_terminal(random_logit_table(tree, rng, 1.0));
  const Sequence y{2, 0, 3};
  const PathGradient g = grad_path_partition(q, y);
  const std::vector<double> dense = g.to_dense();

  // Finite differences of path_partition in the full logit table.
  const auto f = [&](const std::vector<double>& x) {
    LogitTable qx = q;
    qx.values = x;
    return path_partition(qx, y);
  };
  const std::vector<double> fd = oracle::finite_diff(f, q.values);
  REQUIRE(dense.size() == fd.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    CHECK(testutil::near(dense[i], fd[i], 1e-6));
  }

  // Off-path slots are exactly zero, not merely small.
  const StateId off = state_of_prefix(tree, Sequence{0});
  for (TokenId a = 0; a < tree.num_actions(); ++a) {
    CHECK(dense[static_cast<std::size_t>(off * tree.num_actions() + a)] == 0.0);
  }
  REQUIRE(g.states.size() == 3);
  CHECK(g.states[0] == tree.root());
  CHECK(g.states[1] == state_of_prefix(tree, Sequence{2}));
  CHECK(g.states[2] == state_of_prefix(tree, Sequence{2, 0}));
}

}  // TEST_SUITE
