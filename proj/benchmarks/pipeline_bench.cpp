#include <benchmark/benchmark.h>

#include "webgraph/corpus.hpp"
#include "webgraph/features.hpp"
#include "webgraph/graph.hpp"
#include "webgraph/model.hpp"
#include "webgraph/rng.hpp"

using namespace webgraph;

namespace {

GeneratedPage sample_page(std::size_t index) {
  CorpusSpec spec;
  spec.benign_resources = {30, 30};
  spec.trackers = {4, 4};
  return generate_page(spec, index);
}

void BM_BuildGraph(benchmark::State& state) {
  const auto page = sample_page(0);
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(page.trace));
}
BENCHMARK(BM_BuildGraph);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto g = build_graph(sample_page(1).trace);
  for (auto _ : state) benchmark::DoNotOptimize(extract_matrix(g, FeatureSetId::WebgraphFull));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(g.nodes_of_kind(NodeKind::Network).size()));
}
BENCHMARK(BM_ExtractFeatures);

void BM_MatchValues(benchmark::State& state) {
  Rng rng(1);
  std::vector<StoredValue> values;
  for (NodeId i = 0; i < 20; ++i) values.push_back({i, rng.alnum(16)});
  std::vector<RequestUrl> urls;
  for (NodeId j = 0; j < static_cast<NodeId>(state.range(0)); ++j) {
    const auto carried = rng.bernoulli(0.2) ? rng.pick(values).value : rng.alnum(16);
    urls.push_back({100 + j, "https://h.example/p?id=" + carried + "&x=" + rng.alnum(6), j});
  }
  for (auto _ : state) benchmark::DoNotOptimize(match_values(values, urls, GraphConfig{}));
}
BENCHMARK(BM_MatchValues)->Arg(50)->Arg(500);

void BM_Train(benchmark::State& state) {
  Dataset data;
  data.feature_names = feature_names(FeatureSetId::WebgraphFull);
  for (std::size_t p = 0; p < 20; ++p) {
    const auto page = sample_page(p);
    const auto g = build_graph(page.trace);
    const auto m = extract_matrix(g, FeatureSetId::WebgraphFull);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      data.rows.push_back(m.rows[i]);
      data.labels.push_back(
          page.truth.labels.at(g.node(m.node_ids[i]).network().request_id) == Label::ATS);
    }
  }
  Hyperparams hp;
  hp.n_trees = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, hp, 1));
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
