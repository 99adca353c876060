#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "dynfilter/config.hpp"
#include "dynfilter/features.hpp"
#include "dynfilter/filter.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/simulator.hpp"

namespace {

using namespace dynfilter;

FeatureFrame random_frame(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureFrame f;
  for (std::size_t i = 0; i < n; ++i) {
    f.keypoints.push_back({{static_cast<double>(i % 640), static_cast<double>(i % 480)}, 0, 0.0, 1.0});
    f.descriptors.push_back(Descriptor({rng(), rng(), rng(), rng()}));
  }
  return f;
}

void BM_Hamming(benchmark::State& state) {
  const FeatureFrame f = random_frame(2, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hamming_distance(f.descriptors[0], f.descriptors[1]));
  }
}
BENCHMARK(BM_Hamming);

void BM_Match(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FeatureFrame a = random_frame(n, 2);
  const FeatureFrame b = random_frame(n, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_nearest_neighbor(a, b, {}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Match)->Arg(250)->Arg(500)->Arg(1000)->Complexity(benchmark::oNSquared);

SyntheticSequence noisy_ablation_pair() {
  SceneConfig c = scene_preset("ablation");
  c.frame_count = 2;
  c.pixel_noise = 0.2;
  return generate_sequence(c);
}

void BM_Ransac(benchmark::State& state) {
  const auto seq = noisy_ablation_pair();
  std::vector<PointPair> pairs;
  for (const auto& m : seq.frames[1].true_matches) {
    pairs.push_back({seq.frames[0].features.keypoints[m.ref_index].position,
                     seq.frames[1].features.keypoints[m.query_index].position});
  }
  RansacParams params;
  params.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_fundamental_ransac(pairs, params));
  }
  state.counters["pairs"] = static_cast<double>(pairs.size());
}
BENCHMARK(BM_Ransac)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_FilterFramePair(benchmark::State& state) {
  const auto seq = noisy_ablation_pair();
  FilterConfig config;
  config.epipolar_threshold = 0.6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(filter_frame_pair({seq.frames[0].features, seq.frames[0].panoptic},
                                               {seq.frames[1].features, seq.frames[1].panoptic}, config));
  }
  state.counters["keypoints"] = static_cast<double>(seq.frames[1].features.size());
}
BENCHMARK(BM_FilterFramePair)->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
  GrayImage img(640, 480);
  const double a = 20.0 * M_PI / 180.0;
  for (int y = 0; y < 480; ++y) {
    for (int x = 0; x < 640; ++x) {
      const double u = std::cos(a) * x + std::sin(a) * y, v = -std::sin(a) * x + std::cos(a) * y;
      const long cell = static_cast<long>(std::floor(u / 24.0)) + static_cast<long>(std::floor(v / 24.0));
      img.at(x, y) = (cell & 1) ? 40 : 210;
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_and_describe(img, {}));
  }
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
