// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "qspace/design.hpp"
#include "qspace/phantom.hpp"
#include "qspace/pipeline.hpp"
#include "qspace/sphere.hpp"
#include "qspace/tract.hpp"

namespace qspace {
namespace {

DirectionSet design(int n) {
  DesignConfig cfg;
  cfg.n = n;
  return electrostatic_design(cfg);
}

const Phantom& crossing16() {
  static const Phantom p = [] {
    PhantomSpec spec = parse_preset("crossing:60");
    spec.dims = {16, 16, 16};
    return generate_phantom(spec);
  }();
  return p;
}

void BM_ShBasis(benchmark::State& state) {
  const DirectionSet dirs = design(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sh_basis(8, dirs));
}
BENCHMARK(BM_ShBasis)->Arg(30)->Arg(60)->Arg(90);

void BM_FitSh(benchmark::State& state) {
  const DirectionSet dirs = design(60);
  const Eigen::MatrixXd basis = sh_basis(8, dirs);
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(60, 0.2, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(fit_sh(s, basis, kDefaultShLambda));
}
BENCHMARK(BM_FitSh);

void BM_ElectrostaticDesign(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(design(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ElectrostaticDesign)->Arg(6)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Subsample(benchmark::State& state) {
  const DwiVolume& x = crossing16().volume;
  const DirectionSet dirs = design(12);
  for (auto _ : state) benchmark::DoNotOptimize(subsample(x, dirs, 8, kDefaultShLambda));
}
BENCHMARK(BM_Subsample)->Unit(benchmark::kMillisecond);

void BM_LossGradients(benchmark::State& state) {
  const DwiVolume& x = crossing16().volume;
  const auto recon = static_cast<ReconMode>(state.range(0));
  const DirectionSet dirs = design(12);
  const JointModel model(x.dirs, recon, {});
  const ReconstructionParams params = model.initial_params(dirs);
  const RowMatrix coeffs = model.coefficients(x.data);
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(x.data, coeffs, dirs, params, true));
}
BENCHMARK(BM_LossGradients)
    ->Arg(static_cast<int>(ReconMode::sh_interp))
    ->Arg(static_cast<int>(ReconMode::linear))
    ->Unit(benchmark::kMillisecond);

void BM_CsaOdf(benchmark::State& state) {
  const DwiVolume& x = crossing16().volume;
  for (auto _ : state) benchmark::DoNotOptimize(csa_odf(x));
}
BENCHMARK(BM_CsaOdf)->Unit(benchmark::kMillisecond);

void BM_Tractography(benchmark::State& state) {
  const Phantom& p = crossing16();
  const auto seeds = mask_seeds(p.volume.dims, p.truth.fiber_mask());
  for (auto _ : state) benchmark::DoNotOptimize(run_tractography(p.volume, seeds));
}
BENCHMARK(BM_Tractography)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace qspace

BENCHMARK_MAIN();
