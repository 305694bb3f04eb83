#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/labels.hpp"
#include "webgraph/url.hpp"

using namespace webgraph;

TEST(Rules, ParsesSupportedForms) {
  const auto rules = parse_rules(
      "! comment\n"
      "\n"
      "||Tracker1.com^\n"
      "/banner/\n"
      "pixel.gif$third-party\n");
  ASSERT_EQ(rules.size(), 3u);
  EXPECT_EQ(rules.rules()[0].kind, RuleKind::DomainAnchor);
  EXPECT_EQ(rules.rules()[0].pattern, "tracker1.com");
  EXPECT_EQ(rules.rules()[0].line_no, 3u);
  EXPECT_EQ(rules.rules()[1].kind, RuleKind::Substring);
  EXPECT_EQ(rules.rules()[2].kind, RuleKind::SubstringThirdParty);
  EXPECT_EQ(rules.rules()[2].pattern, "pixel.gif");
}

TEST(Rules, RejectsUnsupportedSyntaxWithLineNumber) {
  for (const char* bad : {"@@||good.com^", "example.com##.ad", "||bad host^", "ads$script",
                          "||nocaret.com"}) {
    try {
      parse_rules(std::string("! header\n") + bad + "\n");
      FAIL() << bad;
    } catch (const InvalidRule& e) {
      EXPECT_EQ(e.line_no(), 2u) << bad;
    }
  }
}

TEST(Rules, DomainAnchorMatchesSubdomainsButNotSuffixes) {
  const auto rules = parse_rules("||tracker1.com^\n");
  EXPECT_TRUE(match_url(rules, "http://tracker1.com/a", true));
  EXPECT_TRUE(match_url(rules, "https://cdn.TRACKER1.com/a", true));
  EXPECT_FALSE(match_url(rules, "http://nottracker1.com/a", true));
  EXPECT_FALSE(match_url(rules, "http://example.com/?r=tracker1.com", true));
}

TEST(Rules, SubstringAndThirdPartyOption) {
  const auto rules = parse_rules("/Banner/\npixel.gif$third-party\n");
  EXPECT_TRUE(match_url(rules, "http://example.com/banner/x.png", false));
  EXPECT_TRUE(match_url(rules, "http://other.com/pixel.gif", true));
  EXPECT_FALSE(match_url(rules, "http://example.com/pixel.gif", false));
}

TEST(Rules, UnparseableUrlThrows) {
  EXPECT_THROW(match_url(parse_rules("x\n"), "not a url", true), UnparseableUrl);
}

TEST(Labels, WorkedExampleMatchesTrackerRules) {
  const auto g = oracle::load_fixture_graph();
  const auto rules = parse_rules("||tracker1.com^\n||tracker2.com^\n||tracker3.com^\n");
  const auto result = label_graph(g, rules);
  ASSERT_EQ(result.labels.size(), 5u);
  EXPECT_TRUE(result.diagnostics.empty());
  for (const auto& l : result.labels) {
    EXPECT_EQ(l.label, Label::ATS);
    ASSERT_TRUE(l.rule_index.has_value());
    const auto host = parse_url(g.node(l.node).network().url)->host;
    EXPECT_EQ(rules.rules()[*l.rule_index].pattern, host);
  }
}

TEST(Labels, FirstMatchingRuleIsReported) {
  const auto g = oracle::load_fixture_graph();
  const auto rules = parse_rules("track\n||tracker1.com^\n");
  for (const auto& l : label_graph(g, rules).labels) {
    EXPECT_EQ(l.rule_index, std::optional<std::size_t>(0));
  }
}

TEST(Labels, EmptyRuleSetLabelsEverythingNonAts) {
  const auto g = oracle::load_fixture_graph();
  for (const auto& l : label_graph(g, RuleSet{}).labels) {
    EXPECT_EQ(l.label, Label::NonATS);
    EXPECT_FALSE(l.rule_index);
  }
}

TEST(Labels, UnparseableUrlIsNonAtsWithDiagnostic) {
  PageGraph g(PageInfo{"p", "http://example.com/", "example.com"});
  g.add_node(1, NetworkAttrs{"r1", "::::", ResourceType::Image});
  const auto result = label_graph(g, parse_rules("||example.com^\n"));
  ASSERT_EQ(result.labels.size(), 1u);
  EXPECT_EQ(result.labels[0].label, Label::NonATS);
  EXPECT_EQ(result.diagnostics.size(), 1u);
}

TEST(Labels, CsvNamesTheSource) {
  std::ostringstream out;
  write_labels_csv(out, {{3, Label::ATS, 1}, {4, Label::NonATS, std::nullopt}});
  EXPECT_EQ(out.str(), "node_id,label,source\n3,ATS,rule:1\n4,NonATS,none\n");
  std::ostringstream gen;
  write_labels_csv(gen, {{0, Label::ATS, std::nullopt}}, true);
  EXPECT_EQ(gen.str(), "node_id,label,source\n0,ATS,generator\n");
}
