// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "groklab/tasks.hpp"

using namespace groklab;

TEST_CASE("modular addition dataset is the exhaustive table") {
  TaskDataset ds = gen_mod_add(113, 0);
  CHECK(ds.size() == 113u * 113u);
  CHECK(ds.vocab_size == 114);
  CHECK(ds.equals_token == 113);
  for (size_t i = 0; i < ds.size(); ++i) {
    int a = ds.sequences[i][0];
    int b = ds.sequences[i][1];
    CHECK(ds.sequences[i][2] == 113);
    CHECK(ds.labels[i] == (a + b) % 113);
  }
  // Every ordered pair appears exactly once.
  std::set<std::pair<int, int>> pairs;
  for (const auto& s : ds.sequences) pairs.emplace(s[0], s[1]);
  CHECK(pairs.size() == ds.size());
}

TEST_CASE("modular addition split sizes and disjointness") {
  TaskDataset ds = gen_mod_add(113, 0, 0.3);
  CHECK(ds.train_idx.size() == 3830u);  // floor(0.3 * 12769)
  CHECK(ds.test_idx.size() == 12769u - 3830u);
  std::set<int> train(ds.train_idx.begin(), ds.train_idx.end());
  std::set<int> test(ds.test_idx.begin(), ds.test_idx.end());
  CHECK(train.size() == ds.train_idx.size());
  CHECK(test.size() == ds.test_idx.size());
  for (int i : test) CHECK(train.count(i) == 0);
  CHECK(train.size() + test.size() == ds.size());
}

TEST_CASE("split is deterministic in the seed and differs across seeds") {
  TaskDataset a = gen_mod_add(113, 7);
  TaskDataset b = gen_mod_add(113, 7);
  TaskDataset c = gen_mod_add(113, 8);
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.test_idx == b.test_idx);
  CHECK(a.train_idx != c.train_idx);
}

TEST_CASE("train labels cover all residues roughly uniformly") {
  TaskDataset ds = gen_mod_add(113, 0);
  std::vector<int> counts(113, 0);
  for (int i : ds.train_idx) counts[ds.labels[i]]++;
  // 3830 examples over 113 classes: expect ~34 each; a class with fewer
  // than 10 would signal a broken shuffle.
  for (int c : counts) CHECK(c >= 10);
}

TEST_CASE("permutation indexing round-trips lexicographically") {
  CHECK(perm_index({0, 1, 2, 3, 4}) == 0);
  CHECK(perm_index({4, 3, 2, 1, 0}) == 119);
  CHECK(index_perm(0) == std::array<int, 5>{0, 1, 2, 3, 4});
  CHECK(index_perm(1) == std::array<int, 5>{0, 1, 2, 4, 3});
  for (int i = 0; i < 120; ++i) CHECK(perm_index(index_perm(i)) == i);
  // Lexicographic order is strictly increasing.
  for (int i = 0; i + 1 < 120; ++i) {
    CHECK(index_perm(i) < index_perm(i + 1));
  }
}

TEST_CASE("permutation composition satisfies the group axioms") {
  std::array<int, 5> id = {0, 1, 2, 3, 4};
  for (int i = 0; i < 120; ++i) {
    auto a = index_perm(i);
    CHECK(perm_compose(a, id) == a);
    CHECK(perm_compose(id, a) == a);
  }
  // (a o b)(x) = a(b(x)).
  std::array<int, 5> a = {1, 0, 2, 3, 4};
  std::array<int, 5> b = {0, 2, 1, 3, 4};
  CHECK(perm_compose(a, b) == std::array<int, 5>{1, 2, 0, 3, 4});
  // Associativity on a sample.
  for (int i = 0; i < 120; i += 7) {
    for (int j = 0; j < 120; j += 11) {
      auto x = index_perm(i);
      auto y = index_perm(j);
      auto z = index_perm((i * 31 + j) % 120);
      CHECK(perm_compose(perm_compose(x, y), z) ==
            perm_compose(x, perm_compose(y, z)));
    }
  }
  // Every element has an inverse: composition table rows are permutations.
  std::array<int, 5> g = index_perm(37);
  std::set<int> images;
  for (int j = 0; j < 120; ++j) {
    images.insert(perm_index(perm_compose(g, index_perm(j))));
  }
  CHECK(images.size() == 120u);
}

TEST_CASE("permutation composition dataset is the exhaustive table") {
  TaskDataset ds = gen_s5(0);
  CHECK(ds.size() == 14400u);
  CHECK(ds.vocab_size == 121);
  CHECK(ds.equals_token == 120);
  CHECK(ds.train_idx.size() == 4320u);  // floor(0.3 * 14400)
  for (size_t i = 0; i < ds.size(); i += 97) {
    auto a = index_perm(ds.sequences[i][0]);
    auto b = index_perm(ds.sequences[i][1]);
    CHECK(ds.labels[i] == perm_index(perm_compose(a, b)));
  }
  // Non-abelian: the transpositions (0 1) and (1 2) do not commute.
  std::array<int, 5> a = {1, 0, 2, 3, 4};
  std::array<int, 5> b = {0, 2, 1, 3, 4};
  CHECK(perm_compose(a, b) != perm_compose(b, a));
}

TEST_CASE("collect_split flattens tokens in index order") {
  TaskDataset ds = gen_mod_add(5, 0);
  std::vector<int> tokens, labels;
  collect_split(ds, {0, 7}, tokens, labels);
  REQUIRE(tokens.size() == 6u);
  CHECK(tokens[0] == ds.sequences[0][0]);
  CHECK(tokens[1] == ds.sequences[0][1]);
  CHECK(tokens[2] == ds.sequences[0][2]);
  CHECK(tokens[3] == ds.sequences[7][0]);
  CHECK(labels == std::vector<int>{ds.labels[0], ds.labels[7]});
}

TEST_CASE("dataset CSV dump is well-formed") {
  TaskDataset ds = gen_mod_add(5, 0);
  std::string csv = dataset_csv(ds);
  CHECK(csv.rfind("a,b,label,split\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);  // header + 25 rows
  CHECK(csv.find(",train\n") != std::string::npos);
  CHECK(csv.find(",test\n") != std::string::npos);
}
