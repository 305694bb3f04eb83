#include "webgraph/labels.hpp"

#include <sstream>

#include "webgraph/errors.hpp"
#include "webgraph/public_suffix.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

namespace {

constexpr std::string_view kThirdPartyOption = "$third-party";

bool valid_hostname(std::string_view s) {
  if (s.empty() || s.front() == '.' || s.back() == '.') return false;
  std::size_t label = 0;
  for (char c : s) {
    if (c == '.') {
      if (label == 0) return false;
      label = 0;
      continue;
    }
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    ++label;
  }
  return true;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Label l) { return l == Label::ATS ? "ATS" : "NonATS"; }

RuleSet parse_rules(std::string_view text) {
  std::vector<FilterRule> rules;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '!') continue;
    // Exceptions, element hiding and arbitrary options are outside the grammar.
    if (line.rfind("@@", 0) == 0 || line.find("##") != std::string::npos ||
        line.find("#@#") != std::string::npos) {
      throw InvalidRule(line_no, line);
    }
    FilterRule rule;
    rule.line_no = line_no;
    if (line.rfind("||", 0) == 0) {
      if (line.size() < 4 || line.back() != '^') throw InvalidRule(line_no, line);
      rule.kind = RuleKind::DomainAnchor;
      rule.pattern = to_lower(line.substr(2, line.size() - 3));
      if (!valid_hostname(rule.pattern)) throw InvalidRule(line_no, line);
    } else if (const auto dollar = line.find('$'); dollar != std::string::npos) {
      if (line.substr(dollar) != kThirdPartyOption || dollar == 0) throw InvalidRule(line_no, line);
      rule.kind = RuleKind::SubstringThirdParty;
      rule.pattern = to_lower(line.substr(0, dollar));
    } else {
      rule.kind = RuleKind::Substring;
      rule.pattern = to_lower(line);
    }
    if (rule.pattern.empty()) throw InvalidRule(line_no, line);
    rules.push_back(std::move(rule));
  }
  return RuleSet(std::move(rules));
}

bool rule_matches(const FilterRule& rule, const Url& url, std::string_view raw_url,
                  bool is_third_party) {
  switch (rule.kind) {
    case RuleKind::DomainAnchor:
      return url.host == rule.pattern || ends_with(url.host, "." + rule.pattern);
    case RuleKind::Substring:
      return to_lower(raw_url).find(rule.pattern) != std::string::npos;
    case RuleKind::SubstringThirdParty:
      return is_third_party && to_lower(raw_url).find(rule.pattern) != std::string::npos;
  }
  return false;
}

std::optional<std::size_t> RuleSet::first_match(const Url& url, std::string_view raw_url,
                                                bool is_third_party) const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rule_matches(rules_[i], url, raw_url, is_third_party)) return i;
  }
  return std::nullopt;
}

bool match_url(const RuleSet& rules, std::string_view url, bool is_third_party) {
  const auto parsed = parse_url(url);
  if (!parsed) throw UnparseableUrl(std::string(url));
  return rules.first_match(*parsed, url, is_third_party).has_value();
}

bool is_third_party_url(const Url& url, std::string_view first_party,
                        const PublicSuffixList* suffixes) {
  const auto& psl = suffixes ? *suffixes : PublicSuffixList::bundled();
  return psl.site_of(url.host) != first_party;
}

LabelResult label_graph(const PageGraph& graph, const RuleSet& rules,
                        const PublicSuffixList* suffixes) {
  LabelResult result;
  for (const auto& n : graph.nodes()) {
    if (!n.is(NodeKind::Network)) continue;
    LabeledNode ln{n.id, Label::NonATS, std::nullopt};
    const auto& raw = n.network().url;
    if (const auto url = parse_url(raw)) {
      const bool third = is_third_party_url(*url, graph.page().first_party, suffixes);
      ln.rule_index = rules.first_match(*url, raw, third);
      if (ln.rule_index) ln.label = Label::ATS;
    } else {
      result.diagnostics.push_back("node " + std::to_string(n.id) + ": unparseable URL '" + raw +
                                   "'");
    }
    result.labels.push_back(ln);
  }
  return result;
}

void write_labels_csv(std::ostream& out, const std::vector<LabeledNode>& labels,
                      bool from_generator) {
  out << "node_id,label,source\n";
  for (const auto& l : labels) {
    out << l.node << ',' << to_string(l.label) << ',';
    if (from_generator) {
      out << "generator";
    } else if (l.rule_index) {
      out << "rule:" << *l.rule_index;
    } else {
      out << "none";
    }
    out << '\n';
  }
}

}  // namespace webgraph
