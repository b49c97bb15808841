#include <doctest.h>

#include <softseq/softseq.hpp>

#include "helpers.hpp"
#include "oracle.hpp"

using namespace softseq;

TEST_SUITE("seqspace") {

TEST_CASE("vocab spec validation") {
  CHECK_THROWS_AS(validate(VocabSpec{0, 3, LengthMode::kVariableLen}), SchemaError);
  CHECK_THROWS_AS(validate(VocabSpec{3, 0, LengthMode::kFixedLen}), SchemaError);
  CHECK_NOTHROW(validate(VocabSpec{1, 1, LengthMode::kVariableLen}));
  CHECK(VocabSpec{3, 2, LengthMode::kVariableLen}.eos_id() == 3);
}

TEST_CASE("tree layout matches literal BFS") {
  for (const VocabSpec& spec : testutil::small_spaces()) {
    CAPTURE(spec.vocab_size);
    CAPTURE(spec.max_len);
    const PrefixTree tree = build_tree(spec);
    const std::vector<Sequence> prefixes = oracle::bfs_prefixes(spec);
    REQUIRE(tree.state_count() == static_cast<std::int64_t>(prefixes.size()));
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      CHECK(state_of_prefix(tree, prefixes[i]) == static_cast<StateId>(i));
      CHECK(prefix_of_state(tree, static_cast<StateId>(i)) == prefixes[i]);
      CHECK(tree.depth(static_cast<StateId>(i)) ==
            static_cast<std::int32_t>(prefixes[i].size()));
    }
  }
}

TEST_CASE("child, parent and edge token agree with prefix extension") {
  for (const VocabSpec& spec : testutil::small_spaces()) {
    const PrefixTree tree = build_tree(spec);
    for (StateId s = 0; s < tree.state_count(); ++s) {
      if (s != tree.root()) {
        const Sequence prefix = prefix_of_state(tree, s);
        Sequence parent(prefix.begin(), prefix.end() - 1);
        CHECK(tree.parent(s) == state_of_prefix(tree, parent));
        CHECK(tree.token_from_parent(s) == prefix.back());
      }
      if (tree.depth(s) + 1 < spec.max_len) {
        for (TokenId t = 0; t < spec.vocab_size; ++t) {
          Sequence extended = prefix_of_state(tree, s);
          extended.push_back(t);
          CHECK(tree.child(s, t) == state_of_prefix(tree, extended));
        }
      }
    }
  }
}

TEST_CASE("level ranges partition the states by depth") {
  const PrefixTree tree = build_tree(VocabSpec{3, 3, LengthMode::kVariableLen});
  CHECK(tree.state_count() == 13);  // 1 + 3 + 9
  CHECK(tree.level_begin(0) == 0);
  CHECK(tree.level_end(0) == 1);
  CHECK(tree.level_begin(1) == 1);
  CHECK(tree.level_end(1) == 4);
  CHECK(tree.level_begin(2) == 4);
  CHECK(tree.level_end(2) == 13);
  for (StateId s = 0; s < tree.state_count(); ++s) {
    const std::int32_t d = tree.depth(s);
    CHECK(tree.level_begin(d) <= s);
    CHECK(s < tree.level_end(d));
    CHECK(tree.is_last_depth(s) == (d == 2));
  }
}

TEST_CASE("state budget is enforced") {
  CHECK_THROWS_AS(build_tree(VocabSpec{2, 2, LengthMode::kVariableLen}, 2), CapacityError);
  CHECK_NOTHROW(build_tree(VocabSpec{2, 2, LengthMode::kVariableLen}, 3));
  CHECK_THROWS_AS(build_tree(VocabSpec{10, 10, LengthMode::kFixedLen}, 1'000'000),
                  CapacityError);
  CHECK_THROWS_AS(sequence_count(VocabSpec{10, 10, LengthMode::kFixedLen}, 1'000'000),
                  CapacityError);
  // Overflow-prone sizes must throw rather than wrap.
  CHECK_THROWS_AS(build_tree(VocabSpec{1'000'000, 100, LengthMode::kFixedLen},
                             std::numeric_limits<std::int64_t>::max() / 2),
                  CapacityError);
}

TEST_CASE("sequence count matches literal enumeration") {
  for (const VocabSpec& spec : testutil::small_spaces()) {
    CHECK(sequence_count(spec) ==
          static_cast<std::int64_t>(oracle::all_responses(spec).size()));
  }
  CHECK(sequence_count(VocabSpec{3, 3, LengthMode::kVariableLen}) == 13);
  CHECK(sequence_count(VocabSpec{8, 4, LengthMode::kFixedLen}) == 4096);
  CHECK(sequence_count(VocabSpec{4, 8, LengthMode::kFixedLen}) == 65536);
}

TEST_CASE("canonical enumeration and sequence ids round-trip") {
  for (const VocabSpec& spec : testutil::small_spaces()) {
    const std::vector<Sequence> expect = oracle::all_responses(spec);
    CHECK(enumerate_sequences(spec) == expect);
    const PrefixTree tree = build_tree(spec);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(sequence_id(tree, expect[i]) == static_cast<SeqId>(i));
      CHECK(sequence_from_id(tree, static_cast<SeqId>(i)) == expect[i]);
    }
    CHECK_THROWS_AS(sequence_from_id(tree, -1), InvalidSequenceError);
    CHECK_THROWS_AS(sequence_from_id(tree, static_cast<SeqId>(expect.size())),
                    InvalidSequenceError);
  }
}

TEST_CASE("validate_sequence rejects malformed responses") {
  const VocabSpec var{2, 3, LengthMode::kVariableLen};  // EOS id 2
  CHECK_NOTHROW(validate_sequence(var, Sequence{2}));
  CHECK_NOTHROW(validate_sequence(var, Sequence{0, 1, 2}));
  CHECK_THROWS_AS(validate_sequence(var, Sequence{}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(var, Sequence{0, 1}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(var, Sequence{2, 0, 2}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(var, Sequence{0, 0, 0, 2}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(var, Sequence{3, 2}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(var, Sequence{-1, 2}), InvalidSequenceError);

  const VocabSpec fix{2, 3, LengthMode::kFixedLen};
  CHECK_NOTHROW(validate_sequence(fix, Sequence{0, 1, 0}));
  CHECK_THROWS_AS(validate_sequence(fix, Sequence{0, 1}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(fix, Sequence{0, 1, 0, 1}), InvalidSequenceError);
  CHECK_THROWS_AS(validate_sequence(fix, Sequence{0, 1, 2}), InvalidSequenceError);
}

TEST_CASE("state_of_prefix rejects non-prefixes") {
  const PrefixTree tree = build_tree(VocabSpec{2, 3, LengthMode::kVariableLen});
  CHECK_THROWS_AS(state_of_prefix(tree, Sequence{2}), InvalidSequenceError);  // EOS
  CHECK_THROWS_AS(state_of_prefix(tree, Sequence{0, 0, 0}), InvalidSequenceError);
  CHECK(state_of_prefix(tree, Sequence{}) == tree.root());
}

TEST_CASE("fold_path visits the scored edges in order") {
  const PrefixTree var = build_tree(VocabSpec{3, 3, LengthMode::kVariableLen});
  std::vector<std::pair<StateId, TokenId>> steps;
  fold_path(var, Sequence{1, 0, 3}, [&](StateId s, TokenId a) { steps.emplace_back(s, a); });
  REQUIRE(steps.size() == 3);
  CHECK(steps[0] == std::pair<StateId, TokenId>{state_of_prefix(var, Sequence{}), 1});
  CHECK(steps[1] == std::pair<StateId, TokenId>{state_of_prefix(var, Sequence{1}), 0});
  CHECK(steps[2] == std::pair<StateId, TokenId>{state_of_prefix(var, Sequence{1, 0}), 3});

  // Immediate EOS scores one edge from the root.
  steps.clear();
  fold_path(var, Sequence{3}, [&](StateId s, TokenId a) { steps.emplace_back(s, a); });
  REQUIRE(steps.size() == 1);
  CHECK(steps[0] == std::pair<StateId, TokenId>{var.root(), 3});

  const PrefixTree fix = build_tree(VocabSpec{2, 2, LengthMode::kFixedLen});
  steps.clear();
  fold_path(fix, Sequence{1, 0}, [&](StateId s, TokenId a) { steps.emplace_back(s, a); });
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == std::pair<StateId, TokenId>{fix.root(), 1});
  CHECK(steps[1] == std::pair<StateId, TokenId>{state_of_prefix(fix, Sequence{1}), 0});
}

}  // TEST_SUITE
