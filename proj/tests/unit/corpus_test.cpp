#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <set>

#include "webgraph/corpus.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/io.hpp"
#include "webgraph/model.hpp"
#include "webgraph/url.hpp"

using namespace webgraph;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("webgraph_corpus_test_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t count_label(const GroundTruth& t, Label l) {
  std::size_t n = 0;
  for (const auto& [id, label] : t.labels) n += label == l;
  return n;
}

}  // namespace

TEST(Corpus, PagesAreDeterministic) {
  CorpusSpec spec;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = generate_page(spec, i), b = generate_page(spec, i);
    EXPECT_EQ(serialize_trace(a.trace), serialize_trace(b.trace));
    EXPECT_EQ(a.truth.labels, b.truth.labels);
  }
  auto other = spec;
  other.seed = 2;
  EXPECT_NE(serialize_trace(generate_page(spec, 0).trace),
            serialize_trace(generate_page(other, 0).trace));
}

TEST(Corpus, GeneratedTracesValidateAndBuild) {
  CorpusSpec spec;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto page = generate_page(spec, i);
    EXPECT_EQ(page.truth.page_id, "page_" + std::to_string(i));
    const auto reparsed = parse_trace(serialize_trace(page.trace));
    const auto g = build_graph(reparsed);
    EXPECT_TRUE(g.check_invariants().empty());
    EXPECT_EQ(g.nodes_of_kind(NodeKind::Network).size(), page.truth.labels.size());
    EXPECT_GT(count_label(page.truth, Label::ATS), 0u);
  }
}

TEST(Corpus, NoTrackersMeansNoAtsAndNoSharedValues) {
  CorpusSpec spec;
  spec.trackers = {0, 0};
  spec.redirect_sync_pairs = {0, 0};
  spec.query_sync_flows = {0, 0};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto page = generate_page(spec, i);
    EXPECT_EQ(count_label(page.truth, Label::ATS), 0u);
    EXPECT_TRUE(page.truth.tracker_domains.empty());
    EXPECT_EQ(build_graph(page.trace).count_edges(EdgeKind::SharedValue), 0u);
  }
}

TEST(Corpus, OneRedirectSyncPairLinksThePair) {
  CorpusSpec spec;
  spec.redirect_sync_pairs = {1, 1};
  spec.query_sync_flows = {0, 0};
  spec.encoded_sync_fraction = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto g = build_graph(generate_page(spec, i).trace);
    std::vector<Edge> redirects;
    for (const auto& e : g.edges()) {
      if (e.kind == EdgeKind::Redirect) redirects.push_back(e);
    }
    ASSERT_FALSE(redirects.empty());
    const auto& first = redirects.front();
    bool linked = false;
    for (const auto& e : g.edges()) {
      if (e.kind == EdgeKind::SharedValue && g.node(e.src).is(NodeKind::Network) &&
          g.node(e.dst).is(NodeKind::Network) &&
          ((e.src == first.src && e.dst == first.dst) || (e.src == first.dst && e.dst == first.src))) {
        linked = true;
      }
    }
    EXPECT_TRUE(linked) << "page " << i;
  }
}

TEST(Corpus, ValidationRejectsBadSpecs) {
  CorpusSpec spec;
  spec.n_pages = 0;
  EXPECT_THROW(validate_spec(spec), DataError);
  spec = CorpusSpec{};
  spec.trackers = {3, 1};
  EXPECT_THROW(validate_spec(spec), DataError);
  EXPECT_NO_THROW(validate_spec(CorpusSpec{}));
}

TEST(Corpus, SpecJsonRoundTrip) {
  CorpusSpec spec;
  spec.n_pages = 7;
  spec.seed = 99;
  spec.trackers = {2, 3};
  spec.encoded_sync_fraction = 0.5;
  EXPECT_EQ(corpus_spec_from_json(corpus_spec_to_json(spec)), spec);
  EXPECT_EQ(corpus_spec_from_json(nlohmann::json::object()), CorpusSpec{});
}

TEST(Corpus, WrittenRulesReproduceGroundTruth) {
  CorpusSpec spec;
  spec.n_pages = 12;
  const auto dir = temp_dir("rules");
  const auto summary = generate_corpus(spec, dir, 2);
  EXPECT_EQ(summary.pages, 12u);
  const auto rules = parse_rules(read_file(dir / "rules.txt"));
  const auto truth = read_ground_truth(dir / "labels.csv");
  const auto entries = read_manifest(dir);
  ASSERT_EQ(entries.size(), 12u);
  std::size_t requests = 0;
  for (const auto& e : entries) {
    const auto g = build_graph(parse_trace(read_file(dir / e.file)));
    const auto& page_truth = truth.at(e.page_id);
    for (const auto& l : label_graph(g, rules).labels) {
      EXPECT_EQ(l.label, page_truth.at(g.node(l.node).network().request_id));
      ++requests;
    }
  }
  EXPECT_EQ(requests, summary.requests);
  fs::remove_all(dir);
}

TEST(Corpus, OutputDoesNotDependOnJobs) {
  CorpusSpec spec;
  spec.n_pages = 6;
  const auto a = temp_dir("jobs1"), b = temp_dir("jobs3");
  generate_corpus(spec, a, 1);
  generate_corpus(spec, b, 3);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(read_file(entry.path()), read_file(b / rel)) << rel;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Corpus, FlowFeaturesSeparateWhereAContentStumpCannot) {
  CorpusSpec spec;
  spec.seed = 5;
  spec.query_sync_flows = {1, 2};
  spec.benign_lookalikes = {2, 4};
  auto dataset = [&](std::size_t from, std::size_t to, FeatureSetId set) {
    Dataset d;
    d.feature_names = feature_names(set);
    for (std::size_t p = from; p < to; ++p) {
      const auto page = generate_page(spec, p);
      const auto g = build_graph(page.trace);
      const auto m = extract_matrix(g, set);
      for (std::size_t i = 0; i < m.rows.size(); ++i) {
        d.rows.push_back(m.rows[i]);
        d.labels.push_back(
            page.truth.labels.at(g.node(m.node_ids[i]).network().request_id) == Label::ATS);
      }
    }
    return d;
  };
  auto accuracy = [](const TreeEnsembleModel& m, const Dataset& d) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.rows.size(); ++i) ok += m.predict(d.rows[i]).label == d.labels[i];
    return static_cast<double>(ok) / static_cast<double>(d.rows.size());
  };
  Hyperparams forest;
  forest.n_trees = 20;
  Hyperparams stump;
  stump.n_trees = 1;
  stump.max_depth = 1;
  stump.bootstrap = false;
  stump.features_per_split = content_feature_names().size();

  Dataset content_train = dataset(0, 40, FeatureSetId::WebgraphFull);
  Dataset content_test = dataset(40, 60, FeatureSetId::WebgraphFull);
  for (auto* d : {&content_train, &content_test}) {
    d->feature_names.resize(content_feature_names().size());
    for (auto& r : d->rows) r.resize(content_feature_names().size());
  }
  const auto flow_acc = accuracy(train(dataset(0, 40, FeatureSetId::WebgraphFlowonly), forest, 1),
                                 dataset(40, 60, FeatureSetId::WebgraphFlowonly));
  const auto stump_acc = accuracy(train(content_train, stump, 1), content_test);
  EXPECT_GT(flow_acc, stump_acc);
  EXPECT_GT(flow_acc, 0.9);
}
