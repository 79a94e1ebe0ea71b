#include <benchmark/benchmark.h>

#include "cookieflow/detector.hpp"
#include "cookieflow/ecosystem.hpp"
#include "cookieflow/simulator.hpp"

namespace cf = cookieflow;

namespace {

struct Fixture {
  cf::EcosystemConfig config;
  std::vector<cf::CrawlEvent> events;
  cf::CookieJar jar;
  std::vector<cf::SentCookieObservation> sent;
  cf::VisitTable visits;
  cf::PslRuleSet psl;
  cf::TrackerDomainSet trackers;
  std::vector<std::string> hosts;

  explicit Fixture(std::size_t sites) {
    cf::RandomEcosystemParams p;
    p.sites = sites;
    p.trackers = 60;
    p.max_embeds = 12;
    config = cf::random_ecosystem(p, 1);
    events = cf::generate(config, 1);
    jar = cf::build_jar(events);
    sent = cf::extract_sent(events);
    visits = cf::summarize_visits(events);
    psl = cf::load_psl("com\nnet");
    trackers = cf::listed_trackers(config);
    for (const auto& ev : events)
      if (const auto* r = std::get_if<cf::HttpRequest>(&ev.payload)) hosts.push_back(r->target_host);
  }
};

const Fixture& fixture(std::size_t sites) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(sites);
  if (it == cache.end()) it = cache.emplace(sites, Fixture(sites)).first;
  return it->second;
}

void BM_DetectSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(cf::detect_intractable_serial(f.jar, f.sent, f.visits, f.psl, f.trackers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.sent.size()));
}

void BM_DetectParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cf::detect_intractable(f.jar, f.sent, f.visits, f.psl, f.trackers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.sent.size()));
}

void BM_ClassifySerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cf::classify_hosts_serial(f.hosts, f.trackers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.hosts.size()));
}

void BM_ClassifyParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cf::classify_hosts(f.hosts, f.trackers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.hosts.size()));
}

}  // namespace

BENCHMARK(BM_DetectSerial)->Arg(500)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DetectParallel)->Arg(500)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifySerial)->Arg(500)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ClassifyParallel)->Arg(500)->Arg(4000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
