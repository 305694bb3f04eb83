#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "webgraph/graph.hpp"

namespace webgraph {

class PublicSuffixList;

enum class FeatureSetId {
  AdgraphFull,        // content + AdGraph structure
  AdgraphStructural,  // AdGraph structure
  WebgraphFull,       // content + structure + flow
  WebgraphNoflow,     // structure
  WebgraphFlowonly,   // structure + flow
};
inline constexpr FeatureSetId kAllFeatureSets[] = {
    FeatureSetId::AdgraphFull, FeatureSetId::AdgraphStructural, FeatureSetId::WebgraphFull,
    FeatureSetId::WebgraphNoflow, FeatureSetId::WebgraphFlowonly};

enum class FeatureCategory { Content, Structure, Flow };

std::string_view to_string(FeatureSetId id);
std::string_view to_string(FeatureCategory c);
std::optional<FeatureSetId> parse_feature_set(std::string_view s);

/// Ordered column names of a feature set: content, then structure, then flow.
const std::vector<std::string>& feature_names(FeatureSetId id);
const std::vector<std::string>& content_feature_names();
const std::vector<std::string>& structural_feature_names(bool adgraph);
const std::vector<std::string>& flow_feature_names();

/// Category of a known feature name. Throws std::out_of_range otherwise.
FeatureCategory feature_category(std::string_view name);

struct FeatureConfig {
  std::vector<std::string> ad_keywords = default_ad_keywords();
  const PublicSuffixList* suffixes = nullptr;  // bundled list when null

  static std::vector<std::string> default_ad_keywords();
  /// One keyword per line; blank lines and lines starting with '#' are skipped.
  static std::vector<std::string> parse_keywords(std::string_view text);
};

struct FeatureDiagnostic {
  NodeId node = 0;
  std::string detail;
  friend bool operator==(const FeatureDiagnostic&, const FeatureDiagnostic&) = default;
};

/// Content features of one network node, in content_feature_names() order.
std::vector<double> content_features(const PageGraph& graph, NodeId node,
                                     const FeatureConfig& config,
                                     std::vector<FeatureDiagnostic>* diagnostics = nullptr);

/// Precomputed graph statistics shared by every row of one page.
class GraphFeatureContext {
 public:
  explicit GraphFeatureContext(const PageGraph& graph);

  /// Structural features over the structural (WebGraph) or AdGraph view, in
  /// structural_feature_names(adgraph) order.
  std::vector<double> structural(NodeId node, bool adgraph) const;
  /// Flow features in flow_feature_names() order.
  std::vector<double> flow(NodeId node) const;

 private:
  const PageGraph& graph_;
  GraphView structural_view_;
  GraphView adgraph_view_;
  GraphView flow_view_;
};

std::vector<double> structural_features(const PageGraph& graph, NodeId node, bool adgraph);
std::vector<double> flow_features(const PageGraph& graph, NodeId node);

/// One row per network node, ordered by node id.
struct FeatureMatrix {
  FeatureSetId set = FeatureSetId::WebgraphFull;
  std::vector<std::string> names;
  std::vector<NodeId> node_ids;
  std::vector<std::vector<double>> rows;
  std::vector<FeatureDiagnostic> diagnostics;

  std::size_t column(std::string_view name) const;  // throws std::out_of_range
  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

FeatureMatrix extract_matrix(const PageGraph& graph, FeatureSetId set,
                             const FeatureConfig& config = {});

/// CSV with header `node_id,label,<names...>`. `labels` is either empty
/// (label column left blank) or aligned with the rows, 1 = ATS.
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix,
                       const std::vector<int>& labels = {});

/// Parses write_feature_csv output. Labels of -1 mark blank cells.
FeatureMatrix read_feature_csv(std::string_view text, FeatureSetId set, std::vector<int>* labels);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace webgraph
