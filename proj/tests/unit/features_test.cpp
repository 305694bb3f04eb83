#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "webgraph/corpus.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/features.hpp"
#include "webgraph/url.hpp"

using namespace webgraph;

namespace {

NodeId request_node(const PageGraph& g, const std::string& request_id) {
  for (const auto& n : g.nodes()) {
    if (n.is(NodeKind::Network) && n.network().request_id == request_id) return n.id;
  }
  throw std::runtime_error("no request " + request_id);
}

double feature(const FeatureMatrix& m, NodeId node, const std::string& name) {
  for (std::size_t i = 0; i < m.node_ids.size(); ++i) {
    if (m.node_ids[i] == node) return m.rows[i][m.column(name)];
  }
  throw std::runtime_error("node not in matrix");
}

PageGraph single_request_graph(const std::string& url) {
  PageGraph g(PageInfo{"p", "https://www.example.com/", "example.com"});
  g.add_node(1, NetworkAttrs{"r1", url, ResourceType::Image});
  return g;
}

}  // namespace

TEST(Features, FeatureSetComposition) {
  const auto& content = content_feature_names();
  EXPECT_EQ(content.size(), 14u);
  for (auto id : kAllFeatureSets) {
    const auto& names = feature_names(id);
    EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
    EXPECT_EQ(parse_feature_set(to_string(id)), id);
  }
  EXPECT_EQ(feature_names(FeatureSetId::WebgraphFull).size(),
            content.size() + structural_feature_names(false).size() + flow_feature_names().size());
  for (const auto& n : feature_names(FeatureSetId::WebgraphFlowonly)) {
    EXPECT_NE(feature_category(n), FeatureCategory::Content) << n;
  }
  for (const auto& n : feature_names(FeatureSetId::AdgraphFull)) {
    EXPECT_NE(feature_category(n), FeatureCategory::Flow) << n;
  }
  EXPECT_FALSE(parse_feature_set("bogus"));
}

TEST(Features, ContentFeaturesOfAnAdLikeUrl) {
  const auto g = single_request_graph("https://ads.tracker.com/banner/img?size=300x250&cb=1;x");
  const auto f = content_features(g, 0, FeatureConfig{});
  const auto& names = content_feature_names();
  auto at = [&](const char* n) {
    return f[std::find(names.begin(), names.end(), n) - names.begin()];
  };
  EXPECT_EQ(at("req_type_image"), 1);
  EXPECT_EQ(at("req_type_script"), 0);
  EXPECT_EQ(at("ad_keyword_in_url"), 1);
  EXPECT_EQ(at("ad_dimensions_in_url"), 1);
  EXPECT_EQ(at("valid_query_string"), 1);
  EXPECT_EQ(at("url_length"), 54);
  EXPECT_EQ(at("is_third_party"), 1);
  EXPECT_EQ(at("is_first_party_subdomain"), 0);
  EXPECT_EQ(at("semicolon_in_query"), 1);
}

TEST(Features, ContentFeaturesOfAFirstPartySubdomain) {
  const auto g = single_request_graph("https://static.example.com/css/site.css?ref=example.com&v");
  const auto f = content_features(g, 0, FeatureConfig{});
  const auto& names = content_feature_names();
  auto at = [&](const char* n) {
    return f[std::find(names.begin(), names.end(), n) - names.begin()];
  };
  EXPECT_EQ(at("is_third_party"), 0);
  EXPECT_EQ(at("is_first_party_subdomain"), 1);
  EXPECT_EQ(at("base_domain_in_query"), 1);
  EXPECT_EQ(at("valid_query_string"), 0);  // bare "v" has no value
  EXPECT_EQ(at("ad_keyword_in_url"), 0);
}

TEST(Features, KeywordsMatchWholeTokensOnly) {
  const auto g = single_request_graph("https://www.example.com/downloads/readme.txt");
  const auto f = content_features(g, 0, FeatureConfig{});
  EXPECT_EQ(f[6], 0);  // "downloads" contains "ads" but is not the token "ads"
}

TEST(Features, UnparseableUrlGivesZerosAndDiagnostic) {
  const auto g = single_request_graph("http://bad host/");
  std::vector<FeatureDiagnostic> diags;
  const auto f = content_features(g, 0, FeatureConfig{}, &diags);
  EXPECT_EQ(diags.size(), 1u);
  for (double x : f) EXPECT_EQ(x, 0);
}

TEST(Features, WorkedExampleStructureAndFlow) {
  const auto g = oracle::load_fixture_graph();
  const auto m = extract_matrix(g, FeatureSetId::WebgraphFull);
  EXPECT_EQ(m.rows.size(), 5u);
  const auto r5b = request_node(g, "r5b"), r15 = request_node(g, "r15"),
             r5 = request_node(g, "r5");
  EXPECT_EQ(feature(m, r15, "shared_value_in"), 2);
  EXPECT_EQ(feature(m, r5b, "shared_value_out"), 1);
  EXPECT_EQ(feature(m, r5b, "redirect_depth"), 1);
  EXPECT_EQ(feature(m, r5, "redirects_sent"), 1);
  EXPECT_EQ(feature(m, r5b, "redirects_received"), 1);
  EXPECT_EQ(feature(m, r5b, "cookie_sets"), 1);
  EXPECT_EQ(feature(m, r5, "cookie_gets"), 1);
  EXPECT_EQ(feature(m, r15, "in_degree"), 1);  // only the initiating script in the structural view
  EXPECT_EQ(feature(m, r15, "ascendants_script"), 1);
  EXPECT_EQ(feature(m, r15, "descendant_of_script"), 1);
  EXPECT_EQ(feature(m, r15, "is_third_party"), 1);
  EXPECT_EQ(feature(m, r5b, "graph_nodes"), 14);
}

TEST(Features, AdgraphViewExcludesStorageAndFlow) {
  const auto g = oracle::load_fixture_graph();
  const auto m = extract_matrix(g, FeatureSetId::AdgraphFull);
  const auto r5b = request_node(g, "r5b");
  EXPECT_EQ(feature(m, r5b, "graph_nodes"), 12);
  EXPECT_EQ(feature(m, r5b, "in_degree"), 0);  // redirects are not AdGraph edges
}

TEST(Features, StructuralFeaturesSatisfyBasicIdentities) {
  CorpusSpec spec;
  spec.n_pages = 10;
  for (std::size_t p = 0; p < spec.n_pages; ++p) {
    const auto g = build_graph(generate_page(spec, p).trace);
    const auto m = extract_matrix(g, FeatureSetId::WebgraphFull);
    const auto in = m.column("in_degree"), out = m.column("out_degree"),
               both = m.column("in_out_degree"), closeness = m.column("closeness_centrality"),
               fin = m.column("flow_in_degree"), fout = m.column("flow_out_degree");
    for (const auto& r : m.rows) {
      EXPECT_EQ(r[both], r[in] + r[out]);
      EXPECT_GE(r[closeness], 0);
      EXPECT_LE(r[closeness], 1);
      EXPECT_GE(r[fin] + r[fout], 0);
      for (double x : r) EXPECT_TRUE(std::isfinite(x));
    }
  }
}

TEST(Features, CsvRoundTripIsExact) {
  CorpusSpec spec;
  const auto g = build_graph(generate_page(spec, 3).trace);
  const auto m = extract_matrix(g, FeatureSetId::WebgraphFull);
  std::vector<int> labels(m.rows.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  std::ostringstream out;
  write_feature_csv(out, m, labels);
  std::vector<int> back_labels;
  const auto back = read_feature_csv(out.str(), FeatureSetId::WebgraphFull, &back_labels);
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_EQ(back.node_ids, m.node_ids);
  EXPECT_EQ(back_labels, labels);
  EXPECT_THROW(read_feature_csv(out.str(), FeatureSetId::AdgraphFull, nullptr), FeatureSetMismatch);
}

TEST(Features, FormatDoubleRoundTrips) {
  for (double x : {0.0, 1.0, 0.1, 1.0 / 3.0, 12345.678, 1e-300, 6.02e23}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Features, RenamingUrlsLeavesGraphColumnsUnchanged) {
  // Every host is replaced; path and query tokens are kept, so no
  // shared-value edge is lost.
  for (std::size_t p = 0; p < 5; ++p) {
    CorpusSpec spec;
    auto g = build_graph(generate_page(spec, p).trace);
    const auto before = extract_matrix(g, FeatureSetId::WebgraphFlowonly);
    for (auto id : g.nodes_of_kind(NodeKind::Network)) {
      auto u = *parse_url(g.node(id).network().url);
      u.host = "renamed" + std::to_string(id) + ".example.org";
      g.set_url(id, u.to_string());
    }
    g.recompute_shared_values(GraphConfig{});
    const auto after = extract_matrix(g, FeatureSetId::WebgraphFlowonly);
    ASSERT_EQ(before.rows.size(), after.rows.size());
    for (std::size_t i = 0; i < before.rows.size(); ++i) {
      EXPECT_EQ(std::memcmp(before.rows[i].data(), after.rows[i].data(),
                            before.rows[i].size() * sizeof(double)),
                0);
    }
  }
}
