#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "webgraph/eventlog.hpp"

namespace webgraph {

using NodeId = std::uint32_t;

enum class NodeKind { Html, Network, Script, Storage };

struct HtmlAttrs {
  std::string element_id;
  std::string tag;
  friend bool operator==(const HtmlAttrs&, const HtmlAttrs&) = default;
};

struct NetworkAttrs {
  std::string request_id;
  std::string url;
  ResourceType resource_type = ResourceType::Other;
  friend bool operator==(const NetworkAttrs&, const NetworkAttrs&) = default;
};

struct ScriptAttrs {
  std::string script_id;
  std::optional<std::string> url;
  bool is_eval = false;
  friend bool operator==(const ScriptAttrs&, const ScriptAttrs&) = default;
};

/// One stored value slot. `values` holds every distinct value observed for
/// the slot, in first-seen order.
struct StorageAttrs {
  StorageKind storage = StorageKind::Cookie;
  std::string key;
  std::vector<std::string> values;
  friend bool operator==(const StorageAttrs&, const StorageAttrs&) = default;
};

struct Node {
  NodeId id = 0;
  std::int64_t ts = 0;  // timestamp of the event that introduced the node
  std::variant<HtmlAttrs, NetworkAttrs, ScriptAttrs, StorageAttrs> attrs;

  NodeKind kind() const { return static_cast<NodeKind>(attrs.index()); }
  bool is(NodeKind k) const { return kind() == k; }
  const NetworkAttrs& network() const { return std::get<NetworkAttrs>(attrs); }
  const ScriptAttrs& script() const { return std::get<ScriptAttrs>(attrs); }
  const StorageAttrs& storage() const { return std::get<StorageAttrs>(attrs); }
  const HtmlAttrs& html() const { return std::get<HtmlAttrs>(attrs); }

  friend bool operator==(const Node&, const Node&) = default;
};

enum class EdgeKind {
  Creates,
  Modifies,
  InitiatesRequest,
  Redirect,
  StorageSet,
  StorageGet,
  SharedValue,
  CommonStorageAccess,
};

/// Encodings under which a stored value is searched for in URLs.
enum class MatchTransform { Identity, Base64, Md5Hex, Sha1Hex };
inline constexpr MatchTransform kAllTransforms[] = {MatchTransform::Identity,
                                                    MatchTransform::Base64,
                                                    MatchTransform::Md5Hex,
                                                    MatchTransform::Sha1Hex};

std::string_view to_string(NodeKind k);
std::string_view to_string(EdgeKind k);
std::string_view to_string(MatchTransform t);
std::string apply_transform(MatchTransform t, std::string_view value);

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeKind kind = EdgeKind::Creates;
  MatchTransform transform = MatchTransform::Identity;  // meaningful for SharedValue only

  bool is_flow() const {
    return kind == EdgeKind::SharedValue || kind == EdgeKind::CommonStorageAccess;
  }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphConfig {
  std::size_t min_value_len = 8;
};

struct PageInfo {
  std::string page_id;
  std::string page_url;
  std::string first_party;
  friend bool operator==(const PageInfo&, const PageInfo&) = default;
};

/// Cross-layer page graph. Node ids are dense indices; edges are kept sorted
/// so that two graphs built from the same input compare equal.
class PageGraph {
 public:
  PageGraph() = default;
  explicit PageGraph(PageInfo page) : page_(std::move(page)) {}

  const PageInfo& page() const { return page_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::vector<NodeId> nodes_of_kind(NodeKind k) const;
  std::size_t count_edges(EdgeKind k) const;

  NodeId add_node(std::int64_t ts, decltype(Node::attrs) attrs);
  void add_edge(Edge e);
  /// Removes every edge for which `pred` holds.
  void remove_edges_if(const std::function<bool(const Edge&)>& pred);
  void set_url(NodeId network_node, std::string url);
  /// Appends `value` to a storage node unless already present.
  void add_storage_value(NodeId storage_node, const std::string& value);
  void set_storage_values(NodeId storage_node, std::vector<std::string> values);
  std::int64_t max_ts() const;

  /// Drops all SharedValue edges and recomputes them from current storage
  /// values and URLs.
  void recompute_shared_values(const GraphConfig& config);

  /// Sorts and deduplicates the edge list.
  void canonicalize();

  /// Empty iff the edge-kind domain constraints and endpoint checks hold.
  std::vector<std::string> check_invariants() const;

  friend bool operator==(const PageGraph&, const PageGraph&) = default;

 private:
  PageInfo page_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

PageGraph build_graph(const PageTrace& trace, const GraphConfig& config = {});

/// Inputs to identifier matching.
struct StoredValue {
  NodeId node;
  std::string value;
};
struct RequestUrl {
  NodeId node;
  std::string url;
  std::int64_t ts = 0;
};

/// SharedValue edges: storage node -> each request carrying a transformed
/// value as an exact URL token, plus pairwise edges (earlier -> later request)
/// among the requests that carry the same stored value. Output is sorted and
/// free of duplicates.
std::vector<Edge> match_values(const std::vector<StoredValue>& storage_values,
                               const std::vector<RequestUrl>& urls, const GraphConfig& config);

/// Read-only adjacency over a subset of a graph's edges; all nodes retained.
/// Must not outlive the graph it was built from.
class GraphView {
 public:
  GraphView(const PageGraph& graph, const std::function<bool(const Edge&)>& keep);

  std::size_t node_count() const { return out_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  /// Out/in edge lists hold the far endpoint of every kept edge (multi-edges repeat).
  const std::vector<NodeId>& out(NodeId v) const { return out_[v]; }
  const std::vector<NodeId>& in(NodeId v) const { return in_[v]; }
  /// Distinct neighbours ignoring direction.
  const std::vector<NodeId>& neighbours(NodeId v) const { return undirected_[v]; }
  const std::vector<const Edge*>& edges() const { return edges_; }
  /// Nodes with at least one kept edge.
  std::size_t touched_node_count() const;

 private:
  std::vector<std::vector<NodeId>> out_;
  std::vector<std::vector<NodeId>> in_;
  std::vector<std::vector<NodeId>> undirected_;
  std::vector<const Edge*> edges_;
  std::size_t edge_count_ = 0;
};

/// SharedValue + CommonStorageAccess edges.
GraphView flow_subgraph(const PageGraph& graph);
/// Every non-flow edge.
GraphView structural_subgraph(const PageGraph& graph);
/// The HTML/script/network projection without storage nodes or redirects.
GraphView adgraph_subgraph(const PageGraph& graph);

nlohmann::json graph_to_json(const PageGraph& graph);
PageGraph graph_from_json(const nlohmann::json& j);

}  // namespace webgraph
