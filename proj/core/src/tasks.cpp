// SPDX-License-Identifier: Apache-2.0
#include "groklab/tasks.hpp"

#include <algorithm>
#include <cmath>

#include "groklab/common.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace {

// Shuffle 0..n-1 with the split seed, take the first floor(frac*n) as train.
// Both halves are sorted afterwards so downstream iteration order is stable.
void make_split(TaskDataset& ds, double train_fraction, uint64_t split_seed) {
  size_t n = ds.sequences.size();
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  SplitMix64 rng(split_seed);
  rng.shuffle(order);
  size_t n_train =
      static_cast<size_t>(std::floor(train_fraction * static_cast<double>(n)));
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.test_idx.assign(order.begin() + n_train, order.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  ds.split_seed = split_seed;
  ds.train_fraction = train_fraction;
}

}  // namespace

TaskDataset gen_mod_add(int p, uint64_t split_seed, double train_fraction) {
  if (p < 2) throw ConfigError("gen_mod_add: p must be >= 2");
  TaskDataset ds;
  ds.kind = TaskKind::ModAdd;
  ds.p = p;
  ds.vocab_size = p + 1;
  ds.equals_token = p;
  ds.sequences.reserve(static_cast<size_t>(p) * p);
  ds.labels.reserve(static_cast<size_t>(p) * p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      ds.sequences.push_back({a, b, p});
      ds.labels.push_back((a + b) % p);
    }
  }
  make_split(ds, train_fraction, split_seed);
  return ds;
}

int perm_index(const std::array<int, 5>& perm) {
  std::array<bool, 5> seen{};
  for (int v : perm) {
    if (v < 0 || v > 4 || seen[v]) {
      throw ConfigError("perm_index: not a permutation of {0..4}");
    }
    seen[v] = true;
  }
  static const int factorial[5] = {24, 6, 2, 1, 1};
  int rank = 0;
  for (int i = 0; i < 4; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < 5; ++j)
      if (perm[j] < perm[i]) ++smaller;
    rank += smaller * factorial[i];
  }
  return rank;
}

std::array<int, 5> index_perm(int index) {
  if (index < 0 || index >= 120) {
    throw ConfigError("index_perm: index out of [0,120)");
  }
  static const int factorial[5] = {24, 6, 2, 1, 1};
  std::array<int, 5> pool = {0, 1, 2, 3, 4};
  std::array<int, 5> perm{};
  int avail = 5;
  for (int i = 0; i < 5; ++i) {
    int digit = index / factorial[i];
    index %= factorial[i];
    perm[i] = pool[digit];
    for (int j = digit; j < avail - 1; ++j) pool[j] = pool[j + 1];
    --avail;
  }
  return perm;
}

std::array<int, 5> perm_compose(const std::array<int, 5>& a,
                                const std::array<int, 5>& b) {
  // (a o b)(x) = a(b(x))
  std::array<int, 5> c{};
  for (int x = 0; x < 5; ++x) c[x] = a[b[x]];
  return c;
}

TaskDataset gen_s5(uint64_t split_seed, double train_fraction) {
  TaskDataset ds;
  ds.kind = TaskKind::S5Compose;
  ds.p = 0;
  ds.vocab_size = 121;
  ds.equals_token = 120;
  std::vector<std::array<int, 5>> perms(120);
  for (int i = 0; i < 120; ++i) perms[i] = index_perm(i);
  ds.sequences.reserve(14400);
  ds.labels.reserve(14400);
  for (int a = 0; a < 120; ++a) {
    for (int b = 0; b < 120; ++b) {
      ds.sequences.push_back({a, b, 120});
      ds.labels.push_back(perm_index(perm_compose(perms[a], perms[b])));
    }
  }
  make_split(ds, train_fraction, split_seed);
  return ds;
}

void collect_split(const TaskDataset& ds, const std::vector<int>& idx,
                   std::vector<int>& tokens, std::vector<int>& labels) {
  tokens.clear();
  labels.clear();
  tokens.reserve(idx.size() * 3);
  labels.reserve(idx.size());
  for (int i : idx) {
    const auto& s = ds.sequences[static_cast<size_t>(i)];
    tokens.push_back(s[0]);
    tokens.push_back(s[1]);
    tokens.push_back(s[2]);
    labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
}

std::string dataset_csv(const TaskDataset& ds) {
  std::vector<char> split(ds.size(), 't');
  std::vector<bool> is_train(ds.size(), false);
  for (int i : ds.train_idx) is_train[static_cast<size_t>(i)] = true;
  std::string out = "a,b,label,split\n";
  for (size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(ds.sequences[i][0]);
    out += ',';
    out += std::to_string(ds.sequences[i][1]);
    out += ',';
    out += std::to_string(ds.labels[i]);
    out += ',';
    out += is_train[i] ? "train" : "test";
    out += '\n';
  }
  return out;
}

}  // namespace groklab
