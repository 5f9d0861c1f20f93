// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the training hot path: the BLAS-backed matmul, a
// full-batch forward pass, and a complete forward/backward/optimizer epoch.

#include <benchmark/benchmark.h>

#include "groklab/model.hpp"
#include "groklab/tasks.hpp"
#include "groklab/train.hpp"

using namespace groklab;

namespace {

ModelConfig reference_config() {
  ModelConfig cfg;
  cfg.vocab_size = 114;
  cfg.d_model = 128;
  cfg.n_heads = 4;
  cfg.d_head = 32;
  cfg.d_mlp = 512;
  return cfg;
}

void BM_Matmul(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  SplitMix64 rng(0);
  Tensor<float> a = Tensor<float>::randn({m, 128}, rng, 1.0);
  Tensor<float> b = Tensor<float>::randn({128, 512}, rng, 1.0);
  for (auto _ : state) {
    Tape<float> tape;
    auto out = tape.matmul(tape.leaf(a, false), tape.leaf(b, false));
    benchmark::DoNotOptimize(tape.value(out).data.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * m * 128 * 512);
}
BENCHMARK(BM_Matmul)->Arg(512)->Arg(3830);

void BM_Forward(benchmark::State& state) {
  ModelConfig cfg = reference_config();
  TaskDataset ds = gen_mod_add(113, 0);
  std::vector<int> tokens, labels;
  collect_split(ds, ds.train_idx, tokens, labels);
  Params<float> params = init_params<float>(cfg);
  for (auto _ : state) {
    Tape<float> tape;
    auto ids = stage_params(tape, params, false);
    auto r = forward(tape, ids, cfg, tokens);
    benchmark::DoNotOptimize(tape.value(r.logits).data.data());
  }
}
BENCHMARK(BM_Forward);

void BM_TrainEpoch(benchmark::State& state) {
  ModelConfig cfg = reference_config();
  cfg.norm_mode = NormMode::Spherical;
  cfg.unembed_mode = UnembedMode::BoundedCosine;
  TaskDataset ds = gen_mod_add(113, 0);
  std::vector<int> tokens, labels;
  collect_split(ds, ds.train_idx, tokens, labels);
  Params<float> params = init_params<float>(cfg);
  TrainConfig tc;
  AdamW<float> opt(tc);
  int step = 0;
  for (auto _ : state) {
    Tape<float> tape;
    auto ids = stage_params(tape, params, true);
    auto r = forward(tape, ids, cfg, tokens);
    tape.backward(tape.cross_entropy_mean(r.logits, labels));
    Params<float> grads;
    grads.token_embed = tape.grad(ids.token_embed);
    grads.pos_embed = tape.grad(ids.pos_embed);
    for (size_t h = 0; h < ids.w_q.size(); ++h) {
      grads.w_q.push_back(tape.grad(ids.w_q[h]));
      grads.w_k.push_back(tape.grad(ids.w_k[h]));
      grads.w_v.push_back(tape.grad(ids.w_v[h]));
    }
    grads.w_o = tape.grad(ids.w_o);
    grads.w_in = tape.grad(ids.w_in);
    grads.b_in = tape.grad(ids.b_in);
    grads.w_out = tape.grad(ids.w_out);
    grads.b_out = tape.grad(ids.b_out);
    grads.w_unembed = tape.grad(ids.w_unembed);
    opt.step(params, grads, ++step);
  }
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
