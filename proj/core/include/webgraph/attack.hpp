#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "webgraph/features.hpp"
#include "webgraph/graph.hpp"
#include "webgraph/model.hpp"
#include "webgraph/rng.hpp"

namespace webgraph {

class PublicSuffixList;

// ---------------------------------------------------------------------------
// Metrics

struct SwitchCounts {
  std::size_t ats_adv = 0, nonats_adv = 0, ats_web = 0, nonats_web = 0;
  std::size_t desired = 0;        // adversary ATS -> Non-ATS
  std::size_t undesired = 0;      // any Non-ATS -> ATS, plus added nodes predicted ATS
  std::size_t undesired_adv = 0;  // the adversary's share of `undesired`
  std::size_t neutral = 0;        // non-adversary ATS -> Non-ATS
  std::size_t added = 0;          // nodes that did not exist before the attack
  friend bool operator==(const SwitchCounts&, const SwitchCounts&) = default;
};

/// Percentages; nullopt where the denominator is zero.
struct AttackMetrics {
  std::optional<double> success_rate;
  std::optional<double> collateral_damage;
  std::optional<double> other_changes;
};

AttackMetrics metrics_from_counts(const SwitchCounts& c, bool careless);

/// Labels are 1 for ATS. `post` covers every node of `pre` plus any added
/// nodes; added nodes count as adversary nodes.
SwitchCounts count_switches(const std::map<NodeId, int>& pre, const std::map<NodeId, int>& post,
                            const std::set<NodeId>& adversary_nodes);

struct MetricsResult {
  SwitchCounts counts;
  AttackMetrics metrics;
};
MetricsResult compute_metrics(const std::map<NodeId, int>& pre, const std::map<NodeId, int>& post,
                              const std::set<NodeId>& adversary_nodes, bool careless);

// ---------------------------------------------------------------------------
// Content mutation

enum class UrlPolicy { Domain, Subdomain, Both, QueryCount, QueryNames, QueryValues };
std::string_view to_string(UrlPolicy p);
std::optional<UrlPolicy> parse_url_policy(std::string_view s);
/// Comma-separated policy list, e.g. "domain,query_values". Throws DataError.
std::vector<UrlPolicy> parse_url_policies(std::string_view s);

/// Replaces the selected URL components with random tokens. The path is
/// always preserved. Throws UnparseableUrl.
std::string mutate_url_content(std::string_view url, const std::vector<UrlPolicy>& policy, Rng& rng,
                               const PublicSuffixList* suffixes = nullptr);

/// Moves the URL onto `<random-label>.<first_party>`. Throws UnparseableUrl.
std::string collude_first_party(std::string_view url, std::string_view first_party, Rng& rng);

// ---------------------------------------------------------------------------
// Adversary

struct AdversaryScope {
  std::string domain;
  std::set<NodeId> nodes;  // T: every node the adversary controls

  std::set<NodeId> network_nodes(const PageGraph& graph) const;
};

/// Third-party registrable domain with the most ATS-predicted network nodes;
/// ties go to the lexicographically smallest domain. `predictions` maps
/// network node ids to 0/1.
std::optional<std::string> select_adversary(const PageGraph& graph,
                                            const std::map<NodeId, int>& predictions,
                                            const PublicSuffixList* suffixes = nullptr);

/// Third-party domains with at least one ATS prediction, sorted.
std::vector<std::string> ats_third_parties(const PageGraph& graph,
                                           const std::map<NodeId, int>& predictions,
                                           const PublicSuffixList* suffixes = nullptr);

/// Adversary-domain network and script nodes, the storage nodes whose cookie
/// is sent to the adversary, and everything they create, request or store.
AdversaryScope adversary_scope(const PageGraph& graph, const std::string& domain,
                               const PublicSuffixList* suffixes = nullptr);

// ---------------------------------------------------------------------------
// Structure mutation

struct AddResource {
  NodeId parent = 0;
  ResourceType type = ResourceType::Image;
  std::string url;
  friend bool operator==(const AddResource&, const AddResource&) = default;
};
struct Reroute {
  NodeId head = 0;               // first request of the redirect chain
  std::vector<NodeId> scripts;   // scripts[i] takes over chain hop i
  friend bool operator==(const Reroute&, const Reroute&) = default;
};
struct Obfuscate {
  NodeId storage = 0;
  friend bool operator==(const Obfuscate&, const Obfuscate&) = default;
};
using Mutation = std::variant<AddResource, Reroute, Obfuscate>;

std::string describe(const Mutation& m);

/// The redirect chain starting at `head`, head included.
std::vector<NodeId> redirect_chain(const PageGraph& graph, NodeId head);

/// Value encoding outside the detector's transform set: reversed, then hex.
std::string obfuscate_value(std::string_view value);

struct MutationContext {
  GraphConfig graph_config;
  std::function<std::string(std::string_view)> obfuscate = obfuscate_value;
};

/// Applies `m` to a copy of `graph`. Throws InvalidMutation when `m` does not
/// fit the graph. Node count never decreases.
PageGraph apply_mutation(const PageGraph& graph, const Mutation& m,
                         const MutationContext& ctx = {});

struct CandidateRequest {
  const AdversaryScope* scope = nullptr;  // full T
  std::vector<NodeId> sampled;            // the sampled subset of T
  bool collusion = false;
  std::size_t max_nodes = 0;  // AddResource is offered only while below this
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
};

/// Candidate mutations in canonical order: AddResource by parent, Reroute by
/// chain head, Obfuscate by storage node.
std::vector<Mutation> candidate_mutations(const PageGraph& graph, const CandidateRequest& req);

// ---------------------------------------------------------------------------
// Reports

struct AttackConfig {
  std::vector<UrlPolicy> policy;  // content mutation policy
  bool collusion = false;
  bool careless = false;
  std::size_t max_iter = 50;
  double growth_cap = 0.2;
  std::size_t l_T = 10;  // 0 samples all of T
  std::uint64_t seed = 0;
  std::size_t bins = 5;
  std::size_t pages_per_bin = 20;
  std::size_t max_nodes = 250;
};

nlohmann::json attack_config_to_json(const AttackConfig& c);
AttackConfig attack_config_from_json(const nlohmann::json& j);

struct IterationRecord {
  std::size_t iteration = 0;
  Mutation mutation;
  long delta = 0;
  std::size_t candidates = 0;
  SwitchCounts counts;
  AttackMetrics metrics;
  std::size_t node_count = 0;
  double growth = 0;  // percent of the original node count
};

struct AttackReport {
  std::string kind;  // "content" or "structure"
  std::string page_id;
  std::string adversary;
  std::string feature_set;
  bool careless = false;
  bool no_adversary_ats = false;
  bool no_candidates = false;
  SwitchCounts counts;
  AttackMetrics metrics;
  std::vector<IterationRecord> trajectory;
  double growth_used = 0;
};

nlohmann::json attack_report_to_json(const AttackReport& r);
AttackReport attack_report_from_json(const nlohmann::json& j);
/// Plot-ready per-iteration trajectory.
std::string trajectory_csv(const AttackReport& r);

// ---------------------------------------------------------------------------
// Attacks

struct AttackEnv {
  const TreeEnsembleModel* model = nullptr;
  FeatureSetId feature_set = FeatureSetId::WebgraphFull;
  FeatureConfig features;
  MutationContext mutation;
};

/// Predictions (0/1) for every network node of `graph`.
std::map<NodeId, int> classify_graph(const PageGraph& graph, const AttackEnv& env);

/// Rewrites the adversary's initially-ATS URLs, rebuilds shared-value edges,
/// reclassifies and reports the switches. `mutated`, when given, receives the
/// rewritten graph.
AttackReport run_content_attack(const PageGraph& graph, const AttackEnv& env,
                                const AdversaryScope& adversary, const AttackConfig& config,
                                PageGraph* mutated = nullptr);

/// Greedy random graph mutation. `mutated`, when given, receives the final
/// graph.
AttackReport greedy_attack(const PageGraph& graph, const AttackEnv& env,
                           const AdversaryScope& adversary, const AttackConfig& config,
                           PageGraph* mutated = nullptr);

/// Picks up to `per_bin` pages from each of `bins` equal-count size bins over
/// the pages with at most `max_nodes` nodes. Output is sorted.
std::vector<std::string> select_pages_by_size(const std::map<std::string, std::size_t>& sizes,
                                              std::size_t bins, std::size_t per_bin,
                                              std::size_t max_nodes, std::uint64_t seed);

/// Success / collateral summary over many reports.
struct AttackSummary {
  SwitchCounts totals;
  AttackMetrics pooled;  // metrics over the summed counts
  MeanStd success, collateral;  // over reports with defined values
  std::size_t reports = 0;
};
AttackSummary summarize_reports(const std::vector<AttackReport>& reports, bool careless);

/// page_id,adversary,ats_adv,desired,undesired,neutral,success_rate,collateral_damage,other_changes
std::string success_collateral_csv(const std::vector<AttackReport>& reports);

}  // namespace webgraph
