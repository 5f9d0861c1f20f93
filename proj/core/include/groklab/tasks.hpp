// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace groklab {

enum class TaskKind { ModAdd, S5Compose };

/// Tokenized (a, b, =) sequences with labels and a deterministic split.
struct TaskDataset {
  TaskKind kind = TaskKind::ModAdd;
  int p = 0;  // modulus for ModAdd; 0 for S5
  int vocab_size = 0;
  int equals_token = 0;
  std::vector<std::array<int, 3>> sequences;
  std::vector<int> labels;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  uint64_t split_seed = 0;
  double train_fraction = 0.3;

  size_t size() const { return sequences.size(); }
};

/// All p*p pairs of Z_p addition; label = (a+b) mod p, equals token = p.
TaskDataset gen_mod_add(int p, uint64_t split_seed,
                        double train_fraction = 0.3);

/// All 120*120 compositions of S5; permutations enumerated lexicographically,
/// label = index of a o b with (a o b)(x) = a(b(x)), equals token = 120.
TaskDataset gen_s5(uint64_t split_seed, double train_fraction = 0.3);

/// Lehmer-code rank of a permutation of {0..4} in lexicographic order.
int perm_index(const std::array<int, 5>& perm);
std::array<int, 5> index_perm(int index);
std::array<int, 5> perm_compose(const std::array<int, 5>& a,
                                const std::array<int, 5>& b);

/// Flat token stream (3 ids per example) and labels for an index subset.
void collect_split(const TaskDataset& ds, const std::vector<int>& idx,
                   std::vector<int>& tokens, std::vector<int>& labels);

/// CSV dump: a,b,label,split.
std::string dataset_csv(const TaskDataset& ds);

}  // namespace groklab
