#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "webgraph/graph.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

class PublicSuffixList;

enum class RuleKind { DomainAnchor, Substring, SubstringThirdParty };

struct FilterRule {
  RuleKind kind = RuleKind::Substring;
  std::string pattern;  // lowercased
  std::size_t line_no = 0;
  friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

/// Filter rules in file order. Supported forms: `||domain^`, a plain
/// substring, and a substring followed by `$third-party`.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<FilterRule> rules) : rules_(std::move(rules)) {}

  const std::vector<FilterRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }
  std::size_t size() const { return rules_.size(); }

  /// Index of the first rule matching `url`, if any.
  std::optional<std::size_t> first_match(const Url& url, std::string_view raw_url,
                                         bool is_third_party) const;

 private:
  std::vector<FilterRule> rules_;
};

/// Throws InvalidRule for unsupported syntax. `!` comments and blank lines
/// are skipped.
RuleSet parse_rules(std::string_view text);

bool rule_matches(const FilterRule& rule, const Url& url, std::string_view raw_url,
                  bool is_third_party);

/// Throws UnparseableUrl.
bool match_url(const RuleSet& rules, std::string_view url, bool is_third_party);

enum class Label { NonATS = 0, ATS = 1 };
std::string_view to_string(Label l);

struct LabeledNode {
  NodeId node = 0;
  Label label = Label::NonATS;
  std::optional<std::size_t> rule_index;  // empty for generator labels or no match
  friend bool operator==(const LabeledNode&, const LabeledNode&) = default;
};

struct LabelResult {
  std::vector<LabeledNode> labels;  // one per network node, by node id
  std::vector<std::string> diagnostics;
};

/// Third-party status of a URL relative to the page's first party.
bool is_third_party_url(const Url& url, std::string_view first_party,
                        const PublicSuffixList* suffixes = nullptr);

LabelResult label_graph(const PageGraph& graph, const RuleSet& rules,
                        const PublicSuffixList* suffixes = nullptr);

/// CSV `node_id,label,source` where source is `rule:<index>`, `generator`
/// or `none`.
void write_labels_csv(std::ostream& out, const std::vector<LabeledNode>& labels,
                      bool from_generator = false);

}  // namespace webgraph
