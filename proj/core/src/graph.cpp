#include "webgraph/graph.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>

#include "webgraph/digest.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

using nlohmann::json;

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Html: return "html";
    case NodeKind::Network: return "network";
    case NodeKind::Script: return "script";
    case NodeKind::Storage: return "storage";
  }
  return "?";
}

std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Creates: return "creates";
    case EdgeKind::Modifies: return "modifies";
    case EdgeKind::InitiatesRequest: return "initiates_request";
    case EdgeKind::Redirect: return "redirect";
    case EdgeKind::StorageSet: return "storage_set";
    case EdgeKind::StorageGet: return "storage_get";
    case EdgeKind::SharedValue: return "shared_value";
    case EdgeKind::CommonStorageAccess: return "common_storage_access";
  }
  return "?";
}

std::string_view to_string(MatchTransform t) {
  switch (t) {
    case MatchTransform::Identity: return "identity";
    case MatchTransform::Base64: return "base64";
    case MatchTransform::Md5Hex: return "md5";
    case MatchTransform::Sha1Hex: return "sha1";
  }
  return "?";
}

std::string apply_transform(MatchTransform t, std::string_view value) {
  switch (t) {
    case MatchTransform::Identity: return std::string(value);
    case MatchTransform::Base64: return base64_encode(value);
    case MatchTransform::Md5Hex: return md5_hex(value);
    case MatchTransform::Sha1Hex: return sha1_hex(value);
  }
  return std::string(value);
}

// ---------------------------------------------------------------------------
// PageGraph

std::vector<NodeId> PageGraph::nodes_of_kind(NodeKind k) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.is(k)) out.push_back(n.id);
  }
  return out;
}

std::size_t PageGraph::count_edges(EdgeKind k) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [k](const Edge& e) { return e.kind == k; }));
}

NodeId PageGraph::add_node(std::int64_t ts, decltype(Node::attrs) attrs) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{id, ts, std::move(attrs)});
  return id;
}

void PageGraph::add_edge(Edge e) {
  if (e.src >= nodes_.size() || e.dst >= nodes_.size()) {
    throw InvariantViolation("edge endpoint out of range");
  }
  if (e.src == e.dst) return;
  edges_.push_back(e);
}

void PageGraph::remove_edges_if(const std::function<bool(const Edge&)>& pred) {
  edges_.erase(std::remove_if(edges_.begin(), edges_.end(), pred), edges_.end());
}

void PageGraph::set_url(NodeId id, std::string url) {
  auto& n = nodes_.at(id);
  if (!n.is(NodeKind::Network)) throw InvalidMutation("set_url on a non-network node");
  std::get<NetworkAttrs>(n.attrs).url = std::move(url);
}

void PageGraph::add_storage_value(NodeId id, const std::string& value) {
  auto& n = nodes_.at(id);
  if (!n.is(NodeKind::Storage)) throw InvalidMutation("storage value on a non-storage node");
  auto& values = std::get<StorageAttrs>(n.attrs).values;
  if (std::find(values.begin(), values.end(), value) == values.end()) values.push_back(value);
}

void PageGraph::set_storage_values(NodeId id, std::vector<std::string> values) {
  auto& n = nodes_.at(id);
  if (!n.is(NodeKind::Storage)) throw InvalidMutation("storage value on a non-storage node");
  std::get<StorageAttrs>(n.attrs).values = std::move(values);
}

std::int64_t PageGraph::max_ts() const {
  std::int64_t ts = 0;
  for (const auto& n : nodes_) ts = std::max(ts, n.ts);
  return ts;
}

void PageGraph::canonicalize() {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

void PageGraph::recompute_shared_values(const GraphConfig& config) {
  remove_edges_if([](const Edge& e) { return e.kind == EdgeKind::SharedValue; });
  std::vector<StoredValue> values;
  std::vector<RequestUrl> urls;
  for (const auto& n : nodes_) {
    if (n.is(NodeKind::Storage)) {
      for (const auto& v : n.storage().values) values.push_back({n.id, v});
    } else if (n.is(NodeKind::Network)) {
      urls.push_back({n.id, n.network().url, n.ts});
    }
  }
  for (const auto& e : match_values(values, urls, config)) edges_.push_back(e);
  canonicalize();
}

std::vector<std::string> PageGraph::check_invariants() const {
  std::vector<std::string> problems;
  auto kind = [&](NodeId id) { return nodes_[id].kind(); };
  for (const auto& e : edges_) {
    const std::string tag = std::string(to_string(e.kind)) + " " + std::to_string(e.src) + "->" +
                            std::to_string(e.dst);
    if (e.src >= nodes_.size() || e.dst >= nodes_.size()) {
      problems.push_back("dangling endpoint: " + tag);
      continue;
    }
    if (e.src == e.dst) problems.push_back("self loop: " + tag);
    const auto s = kind(e.src), d = kind(e.dst);
    const bool actor_src = s == NodeKind::Script || s == NodeKind::Network;
    const bool actor_dst = d == NodeKind::Script || d == NodeKind::Network;
    switch (e.kind) {
      case EdgeKind::Redirect:
        if (s != NodeKind::Network || d != NodeKind::Network) problems.push_back("bad " + tag);
        break;
      case EdgeKind::StorageSet:
        if (!actor_src || d != NodeKind::Storage) problems.push_back("bad " + tag);
        break;
      case EdgeKind::StorageGet:
        if (s != NodeKind::Storage || !actor_dst) problems.push_back("bad " + tag);
        break;
      case EdgeKind::SharedValue:
        if ((s != NodeKind::Network && s != NodeKind::Storage) || d != NodeKind::Network) {
          problems.push_back("bad " + tag);
        }
        break;
      case EdgeKind::CommonStorageAccess:
        if (s == NodeKind::Storage || d == NodeKind::Storage || e.src > e.dst) {
          problems.push_back("bad " + tag);
        }
        break;
      case EdgeKind::InitiatesRequest:
        if (d != NodeKind::Network) problems.push_back("bad " + tag);
        break;
      case EdgeKind::Modifies:
        if (s != NodeKind::Script || d != NodeKind::Html) problems.push_back("bad " + tag);
        break;
      case EdgeKind::Creates:
        break;
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id != i) problems.push_back("node id mismatch at " + std::to_string(i));
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(const PageTrace& trace)
      : graph_(PageInfo{trace.page_id, trace.page_url, trace.first_party}) {}

  void apply(const PageLoadEvent& ev) {
    std::visit([&](const auto& p) { on(ev, p); }, ev.payload);
  }

  PageGraph finish(const GraphConfig& config) {
    for (const auto& [storage, actors] : accessors_) {
      std::vector<NodeId> list(actors.begin(), actors.end());
      for (std::size_t i = 0; i < list.size(); ++i) {
        for (std::size_t j = i + 1; j < list.size(); ++j) {
          graph_.add_edge({list[i], list[j], EdgeKind::CommonStorageAccess});
        }
      }
    }
    graph_.recompute_shared_values(config);
    return std::move(graph_);
  }

 private:
  static NodeId lookup(const std::unordered_map<std::string, NodeId>& m, const std::string& id) {
    auto it = m.find(id);
    if (it == m.end()) throw DanglingReference(0, id);
    return it->second;
  }

  NodeId storage_node(std::int64_t ts, StorageKind kind, const std::string& key) {
    auto [it, inserted] = storage_.try_emplace({kind, key}, 0);
    if (inserted) it->second = graph_.add_node(ts, StorageAttrs{kind, key, {}});
    return it->second;
  }

  void on(const PageLoadEvent& ev, const ElementCreatedEvent& e) {
    const auto id = graph_.add_node(ev.ts, HtmlAttrs{e.element_id, e.tag});
    elements_[e.element_id] = id;
    if (e.creator.kind == ElementCreatedEvent::Creator::Kind::Script && e.creator.id) {
      graph_.add_edge({lookup(scripts_, *e.creator.id), id, EdgeKind::Creates});
    }
  }

  void on(const PageLoadEvent&, const ElementModifiedEvent& m) {
    graph_.add_edge(
        {lookup(scripts_, m.script_id), lookup(elements_, m.element_id), EdgeKind::Modifies});
  }

  void on(const PageLoadEvent& ev, const ScriptSourceEvent& s) {
    const auto id = graph_.add_node(ev.ts, ScriptAttrs{s.script_id, s.url, s.is_eval});
    scripts_[s.script_id] = id;
    if (s.parent_element) {
      graph_.add_edge({lookup(elements_, *s.parent_element), id, EdgeKind::Creates});
    }
    if (s.url) {
      if (auto it = last_request_for_url_.find(*s.url); it != last_request_for_url_.end()) {
        graph_.add_edge({it->second, id, EdgeKind::Creates});
      }
    }
  }

  void on(const PageLoadEvent& ev, const RequestEvent& r) {
    const auto id = graph_.add_node(ev.ts, NetworkAttrs{r.request_id, r.url, r.resource_type});
    requests_[r.request_id] = id;
    last_request_for_url_[r.url] = id;
    if (r.initiator.id) {
      if (r.initiator.kind == Initiator::Kind::Element) {
        graph_.add_edge({lookup(elements_, *r.initiator.id), id, EdgeKind::InitiatesRequest});
      } else if (r.initiator.kind == Initiator::Kind::Script) {
        graph_.add_edge({lookup(scripts_, *r.initiator.id), id, EdgeKind::InitiatesRequest});
      }
    }
    for (const auto& key : r.cookie_keys) {
      const auto s = storage_node(ev.ts, StorageKind::Cookie, key);
      graph_.add_edge({s, id, EdgeKind::StorageGet});
      accessors_[s].insert(id);
    }
  }

  void on(const PageLoadEvent& ev, const ResponseEvent& r) {
    const auto req = lookup(requests_, r.request_id);
    for (const auto& w : r.set_storage) {
      const auto s = storage_node(ev.ts, w.storage, w.key);
      graph_.add_storage_value(s, w.value);
      graph_.add_edge({req, s, EdgeKind::StorageSet});
      accessors_[s].insert(req);
    }
  }

  void on(const PageLoadEvent& ev, const RedirectEvent& r) {
    const auto from = lookup(requests_, r.request_id);
    const auto type = graph_.node(from).network().resource_type;
    const auto id = graph_.add_node(ev.ts, NetworkAttrs{r.new_request_id, r.to_url, type});
    requests_[r.new_request_id] = id;
    last_request_for_url_[r.to_url] = id;
    graph_.add_edge({from, id, EdgeKind::Redirect});
  }

  void on(const PageLoadEvent& ev, const StorageAccessEvent& s) {
    const auto actor = s.actor.kind == StorageAccessEvent::Actor::Kind::Script
                           ? lookup(scripts_, s.actor.id)
                           : lookup(requests_, s.actor.id);
    const auto node = storage_node(ev.ts, s.storage, s.key);
    graph_.add_storage_value(node, s.value);
    if (ev.kind == EventKind::StorageSet) {
      graph_.add_edge({actor, node, EdgeKind::StorageSet});
    } else {
      graph_.add_edge({node, actor, EdgeKind::StorageGet});
    }
    accessors_[node].insert(actor);
  }

  PageGraph graph_;
  std::unordered_map<std::string, NodeId> requests_, elements_, scripts_;
  std::unordered_map<std::string, NodeId> last_request_for_url_;
  std::map<std::pair<StorageKind, std::string>, NodeId> storage_;
  std::map<NodeId, std::set<NodeId>> accessors_;
};

}  // namespace

PageGraph build_graph(const PageTrace& trace, const GraphConfig& config) {
  GraphBuilder builder(trace);
  for (const auto& ev : trace.events) builder.apply(ev);
  return builder.finish(config);
}

// ---------------------------------------------------------------------------
// Identifier matching

std::vector<Edge> match_values(const std::vector<StoredValue>& storage_values,
                               const std::vector<RequestUrl>& urls, const GraphConfig& config) {
  struct Entry {
    std::size_t value_index;
    MatchTransform transform;
  };
  std::unordered_map<std::string, std::vector<Entry>> index;
  for (std::size_t i = 0; i < storage_values.size(); ++i) {
    const auto& v = storage_values[i].value;
    if (v.size() < config.min_value_len) continue;
    for (auto t : kAllTransforms) index[apply_transform(t, v)].push_back({i, t});
  }

  std::vector<Edge> edges;
  // value index -> (ts, node, transform) of every request carrying it
  std::map<std::size_t, std::set<std::tuple<std::int64_t, NodeId, MatchTransform>>> carriers;
  for (const auto& req : urls) {
    auto parsed = parse_url(req.url);
    if (!parsed) continue;
    for (const auto& token : url_value_tokens(*parsed)) {
      auto it = index.find(token);
      if (it == index.end()) continue;
      for (const auto& entry : it->second) {
        edges.push_back({storage_values[entry.value_index].node, req.node, EdgeKind::SharedValue,
                         entry.transform});
        carriers[entry.value_index].insert({req.ts, req.node, entry.transform});
      }
    }
  }
  for (const auto& [value, set] : carriers) {
    std::vector<std::tuple<std::int64_t, NodeId, MatchTransform>> list(set.begin(), set.end());
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const auto [ts_a, a, ta] = list[i];
        const auto [ts_b, b, tb] = list[j];
        if (a == b) continue;
        edges.push_back({a, b, EdgeKind::SharedValue, tb});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges.erase(std::remove_if(edges.begin(), edges.end(),
                             [](const Edge& e) { return e.src == e.dst; }),
              edges.end());
  return edges;
}

// ---------------------------------------------------------------------------
// Views

GraphView::GraphView(const PageGraph& graph, const std::function<bool(const Edge&)>& keep)
    : out_(graph.node_count()), in_(graph.node_count()), undirected_(graph.node_count()) {
  for (const auto& e : graph.edges()) {
    if (!keep(e)) continue;
    out_[e.src].push_back(e.dst);
    in_[e.dst].push_back(e.src);
    undirected_[e.src].push_back(e.dst);
    undirected_[e.dst].push_back(e.src);
    edges_.push_back(&e);
    ++edge_count_;
  }
  for (auto& nb : undirected_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

std::size_t GraphView::touched_node_count() const {
  std::size_t n = 0;
  for (const auto& nb : undirected_) n += !nb.empty();
  return n;
}

GraphView flow_subgraph(const PageGraph& graph) {
  return GraphView(graph, [](const Edge& e) { return e.is_flow(); });
}

GraphView structural_subgraph(const PageGraph& graph) {
  return GraphView(graph, [](const Edge& e) { return !e.is_flow(); });
}

GraphView adgraph_subgraph(const PageGraph& graph) {
  return GraphView(graph, [](const Edge& e) {
    return e.kind == EdgeKind::Creates || e.kind == EdgeKind::Modifies ||
           e.kind == EdgeKind::InitiatesRequest;
  });
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& s, const Enum (&all)[N], const char* what) {
  for (auto v : all) {
    if (to_string(v) == s) return v;
  }
  throw DataError(std::string("unknown ") + what + " '" + s + "'");
}

constexpr EdgeKind kEdgeKinds[] = {EdgeKind::Creates,     EdgeKind::Modifies,
                                   EdgeKind::InitiatesRequest, EdgeKind::Redirect,
                                   EdgeKind::StorageSet,  EdgeKind::StorageGet,
                                   EdgeKind::SharedValue, EdgeKind::CommonStorageAccess};

}  // namespace

json graph_to_json(const PageGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes()) {
    json attrs;
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, HtmlAttrs>) {
            attrs = {{"element_id", a.element_id}, {"tag", a.tag}};
          } else if constexpr (std::is_same_v<T, NetworkAttrs>) {
            attrs = {{"request_id", a.request_id},
                     {"url", a.url},
                     {"resource_type", to_string(a.resource_type)}};
          } else if constexpr (std::is_same_v<T, ScriptAttrs>) {
            attrs = {{"script_id", a.script_id}, {"url", nullable(a.url)}, {"is_eval", a.is_eval}};
          } else {
            attrs = {{"storage", to_string(a.storage)}, {"key", a.key}, {"values", a.values}};
          }
        },
        n.attrs);
    nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind())}, {"ts", n.ts}, {"attrs", attrs}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    json je = {{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}, {"flow", e.is_flow()}};
    if (e.kind == EdgeKind::SharedValue) je["transform"] = to_string(e.transform);
    edges.push_back(std::move(je));
  }
  const auto& p = graph.page();
  return {{"page", {{"page_id", p.page_id}, {"page_url", p.page_url}, {"first_party", p.first_party}}},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

PageGraph graph_from_json(const json& j) {
  try {
    const auto& p = j.at("page");
    PageGraph g(PageInfo{p.at("page_id").get<std::string>(), p.at("page_url").get<std::string>(),
                         p.at("first_party").get<std::string>()});
    for (const auto& n : j.at("nodes")) {
      const auto kind = n.at("kind").get<std::string>();
      const auto& a = n.at("attrs");
      const auto ts = n.at("ts").get<std::int64_t>();
      NodeId id;
      if (kind == "html") {
        id = g.add_node(ts, HtmlAttrs{a.at("element_id"), a.at("tag")});
      } else if (kind == "network") {
        auto type = parse_resource_type(a.at("resource_type").get<std::string>());
        if (!type) throw DataError("unknown resource_type");
        id = g.add_node(ts, NetworkAttrs{a.at("request_id"), a.at("url"), *type});
      } else if (kind == "script") {
        std::optional<std::string> url;
        if (!a.at("url").is_null()) url = a.at("url").get<std::string>();
        id = g.add_node(ts, ScriptAttrs{a.at("script_id"), url, a.at("is_eval").get<bool>()});
      } else if (kind == "storage") {
        auto storage = parse_storage_kind(a.at("storage").get<std::string>());
        if (!storage) throw DataError("unknown storage kind");
        id = g.add_node(ts, StorageAttrs{*storage, a.at("key"),
                                         a.at("values").get<std::vector<std::string>>()});
      } else {
        throw DataError("unknown node kind '" + kind + "'");
      }
      if (id != n.at("id").get<NodeId>()) throw DataError("node ids must be dense and ordered");
    }
    for (const auto& e : j.at("edges")) {
      Edge edge{e.at("src").get<NodeId>(), e.at("dst").get<NodeId>(),
                enum_from(e.at("kind").get<std::string>(), kEdgeKinds, "edge kind")};
      if (auto it = e.find("transform"); it != e.end()) {
        edge.transform = enum_from(it->get<std::string>(), kAllTransforms, "transform");
      }
      g.add_edge(edge);
    }
    g.canonicalize();
    return g;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed graph JSON: ") + ex.what());
  }
}

}  // namespace webgraph
