#include "uplink/amc.hpp"
#include "uplink/engine.hpp"
#include "uplink/rng.hpp"
#include "uplink/scheduler.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace uplink;

static void BM_BuildTable(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_table(25e6, 1e-6));
  }
}
BENCHMARK(BM_BuildTable);

static void BM_ScheduleFrame(benchmark::State& state) {
  const auto table = build_table(25e6, 1e-6);
  const auto n = static_cast<std::size_t>(state.range(0));
  SchedulerSetup setup;
  setup.kind = SchedulerKind::DTWUSA;
  SchedulerState base(setup);
  std::vector<PollReport> reports(n, PollReport{70, 0.15, 0.1, 0.2});
  RandomStream rng(1);
  std::vector<std::vector<double>> snr(64, std::vector<double>(n));
  for (auto& frame : snr) {
    for (auto& x : frame) {
      x = rng.uniform(8.0, 30.0);
    }
  }
  begin_epoch(base, reports, snr[0], table);
  base.epoch_frames = 1 << 30;
  SchedulerState s = base;
  std::size_t f = 0;
  for (auto _ : state) {
    if (f % 64 == 0) {
      s = base; // keep demand from draining
    }
    schedule_frame(s, snr[f++ % 64], table);
    benchmark::DoNotOptimize(s.stations.data());
  }
}
BENCHMARK(BM_ScheduleFrame)->Arg(10)->Arg(50)->Arg(200);

static void BM_RunSingle(benchmark::State& state) {
  auto c = default_config(DistanceLayout::Equal, SchedulerKind::TWUSA);
  c.num_frames = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_single(c, 0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunSingle)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
