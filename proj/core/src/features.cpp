#include "webgraph/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "webgraph/errors.hpp"
#include "webgraph/public_suffix.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

namespace {

const std::vector<std::string> kContent = {
    "req_type_script",      "req_type_image",     "req_type_iframe",
    "req_type_xhr",         "req_type_stylesheet", "req_type_other",
    "ad_keyword_in_url",    "ad_dimensions_in_url", "valid_query_string",
    "url_length",           "is_third_party",     "is_first_party_subdomain",
    "base_domain_in_query", "semicolon_in_query"};

const std::vector<std::string> kSharedStructure = {
    "graph_nodes",         "graph_edges",         "graph_nodes_per_edge",
    "in_degree",           "out_degree",          "in_out_degree",
    "avg_degree_connectivity", "ascendants_html", "ascendants_script",
    "ascendants_network",  "ascendants_storage",  "ascendant_sets_storage",
    "ascendant_is_eval",   "descendant_of_script", "parent_is_eval_script"};

const std::vector<std::string> kWebgraphOnlyStructure = {"closeness_centrality", "eccentricity"};

const std::vector<std::string> kAdgraphOnlyStructure = {
    "num_siblings",          "parent_num_siblings",     "node_script_modifications",
    "parent_script_modifications", "parent_is_html",    "parent_is_script",
    "parent_is_network",     "parent_in_degree",        "parent_out_degree",
    "parent_in_out_degree",  "parent_avg_degree_connectivity", "sibling_html",
    "sibling_script",        "sibling_network"};

const std::vector<std::string> kFlow = {
    "cookie_sets",          "cookie_gets",          "local_storage_sets",
    "local_storage_gets",   "requests_sent",        "requests_received",
    "redirects_sent",       "redirects_received",   "redirect_depth",
    "shared_value_in",      "shared_value_out",     "common_storage_access",
    "shared_info_ancestors", "flow_graph_nodes",    "flow_graph_edges",
    "flow_graph_nodes_per_edge", "flow_in_degree",  "flow_out_degree",
    "flow_in_out_degree",   "flow_avg_degree_connectivity", "flow_closeness_centrality",
    "flow_eccentricity"};

std::vector<std::string> concat(std::initializer_list<const std::vector<std::string>*> parts) {
  std::vector<std::string> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }

/// Mean total degree of the distinct undirected neighbours of `v`.
double avg_neighbour_degree(const GraphView& view, NodeId v) {
  const auto& nb = view.neighbours(v);
  if (nb.empty()) return 0.0;
  double sum = 0;
  for (auto u : nb) sum += static_cast<double>(view.in(u).size() + view.out(u).size());
  return sum / static_cast<double>(nb.size());
}

struct Centrality {
  double closeness = 0;
  double eccentricity = 0;
};

/// Closeness and eccentricity of `v` within its undirected component.
Centrality centrality(const GraphView& view, NodeId v) {
  std::vector<int> dist(view.node_count(), -1);
  std::deque<NodeId> queue{v};
  dist[v] = 0;
  long long total = 0;
  std::size_t reached = 0;
  int ecc = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto w : view.neighbours(u)) {
      if (dist[w] >= 0) continue;
      dist[w] = dist[u] + 1;
      total += dist[w];
      ecc = std::max(ecc, dist[w]);
      ++reached;
      queue.push_back(w);
    }
  }
  Centrality c;
  if (reached > 0) c.closeness = static_cast<double>(reached) / static_cast<double>(total);
  c.eccentricity = ecc;
  return c;
}

/// Nodes from which `v` is reachable along `preds`, excluding `v`.
template <typename Preds>
std::vector<NodeId> ancestors(std::size_t n, const Preds& preds, NodeId v) {
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{v}, out;
  seen[v] = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto w : preds(u)) {
      if (seen[w]) continue;
      seen[w] = 1;
      out.push_back(w);
      stack.push_back(w);
    }
  }
  return out;
}

std::vector<NodeId> distinct(std::vector<NodeId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool is_eval_script(const Node& n) { return n.is(NodeKind::Script) && n.script().is_eval; }

std::vector<std::string> alnum_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string_view to_string(FeatureSetId id) {
  switch (id) {
    case FeatureSetId::AdgraphFull: return "adgraph_full";
    case FeatureSetId::AdgraphStructural: return "adgraph_structural";
    case FeatureSetId::WebgraphFull: return "webgraph_full";
    case FeatureSetId::WebgraphNoflow: return "webgraph_noflow";
    case FeatureSetId::WebgraphFlowonly: return "webgraph_flowonly";
  }
  return "?";
}

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::Content: return "Content";
    case FeatureCategory::Structure: return "Structure";
    case FeatureCategory::Flow: return "Flow";
  }
  return "?";
}

std::optional<FeatureSetId> parse_feature_set(std::string_view s) {
  for (auto id : kAllFeatureSets) {
    if (to_string(id) == s) return id;
  }
  return std::nullopt;
}

const std::vector<std::string>& content_feature_names() { return kContent; }

const std::vector<std::string>& structural_feature_names(bool adgraph) {
  static const auto web = concat({&kSharedStructure, &kWebgraphOnlyStructure});
  static const auto ad = concat({&kSharedStructure, &kAdgraphOnlyStructure});
  return adgraph ? ad : web;
}

const std::vector<std::string>& flow_feature_names() { return kFlow; }

const std::vector<std::string>& feature_names(FeatureSetId id) {
  static const auto adgraph_full = concat({&kContent, &structural_feature_names(true)});
  static const auto webgraph_full =
      concat({&kContent, &structural_feature_names(false), &kFlow});
  static const auto webgraph_flowonly = concat({&structural_feature_names(false), &kFlow});
  switch (id) {
    case FeatureSetId::AdgraphFull: return adgraph_full;
    case FeatureSetId::AdgraphStructural: return structural_feature_names(true);
    case FeatureSetId::WebgraphFull: return webgraph_full;
    case FeatureSetId::WebgraphNoflow: return structural_feature_names(false);
    case FeatureSetId::WebgraphFlowonly: return webgraph_flowonly;
  }
  throw std::out_of_range("unknown feature set");
}

FeatureCategory feature_category(std::string_view name) {
  auto in = [&](const std::vector<std::string>& v) {
    return std::find(v.begin(), v.end(), name) != v.end();
  };
  if (in(kContent)) return FeatureCategory::Content;
  if (in(kSharedStructure) || in(kWebgraphOnlyStructure) || in(kAdgraphOnlyStructure)) {
    return FeatureCategory::Structure;
  }
  if (in(kFlow)) return FeatureCategory::Flow;
  throw std::out_of_range("unknown feature '" + std::string(name) + "'");
}

std::vector<std::string> FeatureConfig::default_ad_keywords() {
  return {"ad", "ads", "advert", "banner", "sponsor", "track", "pixel", "analytics", "sync"};
}

std::vector<std::string> FeatureConfig::parse_keywords(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(to_lower(line.substr(b, e - b + 1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Content

std::vector<double> content_features(const PageGraph& graph, NodeId node,
                                     const FeatureConfig& config,
                                     std::vector<FeatureDiagnostic>* diagnostics) {
  std::vector<double> f(kContent.size(), 0.0);
  const auto& n = graph.node(node);
  if (!n.is(NodeKind::Network)) return f;
  const auto& net = n.network();
  const auto url = parse_url(net.url);
  if (!url) {
    if (diagnostics) diagnostics->push_back({node, "unparseable URL '" + net.url + "'"});
    return f;
  }
  const auto& psl = config.suffixes ? *config.suffixes : PublicSuffixList::bundled();

  f[static_cast<std::size_t>(net.resource_type)] = 1;

  const auto tokens = alnum_tokens(net.url);
  for (const auto& t : tokens) {
    if (std::find(config.ad_keywords.begin(), config.ad_keywords.end(), t) !=
        config.ad_keywords.end()) {
      f[6] = 1;
      break;
    }
  }

  static const std::regex kDimensions(R"(\d{2,4}x\d{2,4})");
  const auto params = split_query(url->query);
  for (const auto& p : params) {
    if (p.has_value && std::regex_search(p.value, kDimensions)) {
      f[7] = 1;
      break;
    }
  }

  f[8] = url->has_query && !params.empty() &&
                 std::all_of(params.begin(), params.end(),
                             [](const QueryParam& p) { return !p.name.empty() && p.has_value; })
             ? 1
             : 0;
  f[9] = static_cast<double>(net.url.size());

  const auto& first_party = graph.page().first_party;
  const auto site = psl.site_of(url->host);
  f[10] = site != first_party ? 1 : 0;
  f[11] = site == first_party && url->host != first_party ? 1 : 0;
  f[12] = !first_party.empty() && to_lower(url->query).find(first_party) != std::string::npos;
  f[13] = url->query.find(';') != std::string::npos ? 1 : 0;
  return f;
}

// ---------------------------------------------------------------------------
// Structure and flow

GraphFeatureContext::GraphFeatureContext(const PageGraph& graph)
    : graph_(graph),
      structural_view_(structural_subgraph(graph)),
      adgraph_view_(adgraph_subgraph(graph)),
      flow_view_(flow_subgraph(graph)) {}

std::vector<double> GraphFeatureContext::structural(NodeId v, bool adgraph) const {
  const auto& view = adgraph ? adgraph_view_ : structural_view_;
  const auto& nodes = graph_.nodes();
  std::vector<double> f;
  f.reserve(structural_feature_names(adgraph).size());

  double member_count = static_cast<double>(graph_.node_count());
  if (adgraph) member_count -= static_cast<double>(graph_.nodes_of_kind(NodeKind::Storage).size());
  const double edges = static_cast<double>(view.edge_count());
  f.push_back(member_count);
  f.push_back(edges);
  f.push_back(ratio(member_count, edges));

  const double in = static_cast<double>(view.in(v).size());
  const double out = static_cast<double>(view.out(v).size());
  f.push_back(in);
  f.push_back(out);
  f.push_back(in + out);
  f.push_back(avg_neighbour_degree(view, v));

  double by_kind[4] = {0, 0, 0, 0};
  bool sets_storage = false, any_eval = false;
  for (auto a : ancestors(view.node_count(), [&](NodeId u) -> const auto& { return view.in(u); }, v)) {
    by_kind[static_cast<int>(nodes[a].kind())] += 1;
    any_eval = any_eval || is_eval_script(nodes[a]);
    for (auto w : view.out(a)) sets_storage = sets_storage || nodes[w].is(NodeKind::Storage);
  }
  f.push_back(by_kind[static_cast<int>(NodeKind::Html)]);
  f.push_back(by_kind[static_cast<int>(NodeKind::Script)]);
  f.push_back(by_kind[static_cast<int>(NodeKind::Network)]);
  f.push_back(by_kind[static_cast<int>(NodeKind::Storage)]);
  f.push_back(sets_storage ? 1 : 0);
  f.push_back(any_eval ? 1 : 0);
  f.push_back(by_kind[static_cast<int>(NodeKind::Script)] > 0 ? 1 : 0);

  const auto parents = distinct(view.in(v));
  f.push_back(std::any_of(parents.begin(), parents.end(),
                          [&](NodeId p) { return is_eval_script(nodes[p]); })
                  ? 1
                  : 0);

  if (!adgraph) {
    const auto c = centrality(view, v);
    f.push_back(c.closeness);
    f.push_back(c.eccentricity);
    return f;
  }

  auto siblings_of = [&](NodeId x) {
    std::vector<NodeId> sib;
    for (auto p : distinct(view.in(x))) {
      for (auto s : view.out(p)) {
        if (s != x) sib.push_back(s);
      }
    }
    return distinct(std::move(sib));
  };
  auto modifies_count = [&](NodeId x) {
    double c = 0;
    for (const auto* e : view.edges()) c += e->dst == x && e->kind == EdgeKind::Modifies;
    return c;
  };

  const auto sib = siblings_of(v);
  f.push_back(static_cast<double>(sib.size()));
  double p_sib = 0, p_mod = 0, p_in = 0, p_out = 0, p_adc = 0;
  bool p_html = false, p_script = false, p_network = false;
  for (auto p : parents) {
    p_sib += static_cast<double>(siblings_of(p).size());
    p_mod += modifies_count(p);
    p_in += static_cast<double>(view.in(p).size());
    p_out += static_cast<double>(view.out(p).size());
    p_adc += avg_neighbour_degree(view, p);
    p_html = p_html || nodes[p].is(NodeKind::Html);
    p_script = p_script || nodes[p].is(NodeKind::Script);
    p_network = p_network || nodes[p].is(NodeKind::Network);
  }
  const double np = static_cast<double>(parents.size());
  f.push_back(ratio(p_sib, np));
  f.push_back(modifies_count(v));
  f.push_back(ratio(p_mod, np));
  f.push_back(p_html ? 1 : 0);
  f.push_back(p_script ? 1 : 0);
  f.push_back(p_network ? 1 : 0);
  f.push_back(ratio(p_in, np));
  f.push_back(ratio(p_out, np));
  f.push_back(ratio(p_in + p_out, np));
  f.push_back(ratio(p_adc, np));
  double s_kind[4] = {0, 0, 0, 0};
  for (auto s : sib) s_kind[static_cast<int>(nodes[s].kind())] += 1;
  f.push_back(s_kind[static_cast<int>(NodeKind::Html)]);
  f.push_back(s_kind[static_cast<int>(NodeKind::Script)]);
  f.push_back(s_kind[static_cast<int>(NodeKind::Network)]);
  return f;
}

std::vector<double> GraphFeatureContext::flow(NodeId v) const {
  const auto& nodes = graph_.nodes();
  double cookie_sets = 0, cookie_gets = 0, local_sets = 0, local_gets = 0;
  double req_received = 0, redir_sent = 0, redir_received = 0, sv_in = 0, sv_out = 0, csa = 0;
  std::vector<NodeId> created_scripts;
  std::vector<NodeId> redirect_parent;
  std::unordered_map<NodeId, double> initiated;
  for (const auto& e : graph_.edges()) {
    switch (e.kind) {
      case EdgeKind::StorageSet:
        if (e.src == v) {
          (nodes[e.dst].storage().storage == StorageKind::Cookie ? cookie_sets : local_sets) += 1;
        }
        break;
      case EdgeKind::StorageGet:
        if (e.dst == v) {
          (nodes[e.src].storage().storage == StorageKind::Cookie ? cookie_gets : local_gets) += 1;
        }
        break;
      case EdgeKind::InitiatesRequest:
        initiated[e.src] += 1;
        req_received += e.dst == v;
        break;
      case EdgeKind::Creates:
        if (e.src == v && nodes[e.dst].is(NodeKind::Script)) created_scripts.push_back(e.dst);
        break;
      case EdgeKind::Redirect:
        redir_sent += e.src == v;
        redir_received += e.dst == v;
        break;
      case EdgeKind::SharedValue:
        sv_in += e.dst == v;
        sv_out += e.src == v;
        break;
      case EdgeKind::CommonStorageAccess:
        csa += e.src == v || e.dst == v;
        break;
      case EdgeKind::Modifies:
        break;
    }
  }
  double req_sent = initiated.count(v) ? initiated[v] : 0;
  for (auto s : distinct(created_scripts)) req_sent += initiated.count(s) ? initiated[s] : 0;

  // Depth in the redirect chain: hops back to the chain head.
  std::vector<std::vector<NodeId>> redirect_in(graph_.node_count());
  for (const auto& e : graph_.edges()) {
    if (e.kind == EdgeKind::Redirect) redirect_in[e.dst].push_back(e.src);
  }
  double depth = 0;
  {
    std::vector<char> seen(graph_.node_count(), 0);
    NodeId cur = v;
    seen[cur] = 1;
    while (!redirect_in[cur].empty() && !seen[redirect_in[cur].front()]) {
      cur = redirect_in[cur].front();
      seen[cur] = 1;
      depth += 1;
    }
  }

  std::vector<std::vector<NodeId>> flow_preds(graph_.node_count());
  for (const auto* e : flow_view_.edges()) {
    flow_preds[e->dst].push_back(e->src);
    if (e->kind == EdgeKind::CommonStorageAccess) flow_preds[e->src].push_back(e->dst);
  }
  const double shared_ancestors = static_cast<double>(
      ancestors(flow_preds.size(), [&](NodeId u) -> const auto& { return flow_preds[u]; }, v).size());

  const double fn = static_cast<double>(flow_view_.touched_node_count());
  const double fe = static_cast<double>(flow_view_.edge_count());
  const double fin = static_cast<double>(flow_view_.in(v).size());
  const double fout = static_cast<double>(flow_view_.out(v).size());
  const auto c = centrality(flow_view_, v);

  return {cookie_sets,
          cookie_gets,
          local_sets,
          local_gets,
          req_sent,
          req_received,
          redir_sent,
          redir_received,
          depth,
          sv_in,
          sv_out,
          csa,
          shared_ancestors,
          fn,
          fe,
          ratio(fn, fe),
          fin,
          fout,
          fin + fout,
          avg_neighbour_degree(flow_view_, v),
          c.closeness,
          c.eccentricity};
}

std::vector<double> structural_features(const PageGraph& graph, NodeId node, bool adgraph) {
  return GraphFeatureContext(graph).structural(node, adgraph);
}

std::vector<double> flow_features(const PageGraph& graph, NodeId node) {
  return GraphFeatureContext(graph).flow(node);
}

// ---------------------------------------------------------------------------
// Matrix

std::size_t FeatureMatrix::column(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no feature column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

FeatureMatrix extract_matrix(const PageGraph& graph, FeatureSetId set,
                             const FeatureConfig& config) {
  FeatureMatrix m;
  m.set = set;
  m.names = feature_names(set);
  const bool content = set == FeatureSetId::AdgraphFull || set == FeatureSetId::WebgraphFull;
  const bool adgraph = set == FeatureSetId::AdgraphFull || set == FeatureSetId::AdgraphStructural;
  const bool flow = set == FeatureSetId::WebgraphFull || set == FeatureSetId::WebgraphFlowonly;
  const GraphFeatureContext ctx(graph);
  for (const auto& n : graph.nodes()) {
    if (!n.is(NodeKind::Network)) continue;
    std::vector<double> row;
    row.reserve(m.names.size());
    if (content) {
      auto c = content_features(graph, n.id, config, &m.diagnostics);
      row.insert(row.end(), c.begin(), c.end());
    }
    auto s = ctx.structural(n.id, adgraph);
    row.insert(row.end(), s.begin(), s.end());
    if (flow) {
      auto f = ctx.flow(n.id);
      row.insert(row.end(), f.begin(), f.end());
    }
    if (row.size() != m.names.size()) throw InvariantViolation("feature row width mismatch");
    for (double x : row) {
      if (!std::isfinite(x)) throw InvariantViolation("non-finite feature value");
    }
    m.node_ids.push_back(n.id);
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvariantViolation("number formatting failed");
  return std::string(buf, ptr);
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix,
                       const std::vector<int>& labels) {
  if (!labels.empty() && labels.size() != matrix.rows.size()) {
    throw InvariantViolation("label count does not match feature rows");
  }
  out << "node_id,label";
  for (const auto& n : matrix.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    out << matrix.node_ids[i] << ',';
    if (!labels.empty() && labels[i] >= 0) out << labels[i];
    for (double x : matrix.rows[i]) out << ',' << format_double(x);
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::string_view text, FeatureSetId set, std::vector<int>* labels) {
  FeatureMatrix m;
  m.set = set;
  m.names = feature_names(set);
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty feature CSV");
  {
    std::string expected = "node_id,label";
    for (const auto& n : m.names) expected += "," + n;
    if (line != expected) {
      throw FeatureSetMismatch("feature CSV header does not match feature set " +
                               std::string(to_string(set)));
    }
  }
  if (labels) labels->clear();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != m.names.size() + 2) {
      throw DataError("feature CSV line " + std::to_string(line_no) + ": wrong cell count");
    }
    auto parse_num = [&](const std::string& s, auto& value) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("feature CSV line " + std::to_string(line_no) + ": bad number '" + s +
                        "'");
      }
    };
    NodeId id = 0;
    parse_num(cells[0], id);
    int label = -1;
    if (!cells[1].empty()) parse_num(cells[1], label);
    std::vector<double> row(m.names.size());
    for (std::size_t i = 0; i < row.size(); ++i) parse_num(cells[i + 2], row[i]);
    m.node_ids.push_back(id);
    m.rows.push_back(std::move(row));
    if (labels) labels->push_back(label);
  }
  return m;
}

}  // namespace webgraph
