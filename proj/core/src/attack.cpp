#include "webgraph/attack.hpp"

#include <algorithm>
#include <deque>
#include <nlohmann/json.hpp>
#include <sstream>

#include "webgraph/digest.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/public_suffix.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

using nlohmann::json;

namespace {

/// FNV-1a; stable across platforms, used to fold strings into RNG paths.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double pct(std::size_t num, std::size_t den) {
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

const PublicSuffixList& psl_or_bundled(const PublicSuffixList* p) {
  return p ? *p : PublicSuffixList::bundled();
}

std::string site_of_url(const std::string& url, const PublicSuffixList& psl) {
  const auto parsed = parse_url(url);
  return parsed ? psl.site_of(parsed->host) : std::string();
}

bool is_structural_leaf(const PageGraph& g, NodeId v) {
  for (const auto& e : g.edges()) {
    if (e.src != v) continue;
    if (e.kind == EdgeKind::Creates || e.kind == EdgeKind::Modifies ||
        e.kind == EdgeKind::InitiatesRequest || e.kind == EdgeKind::Redirect) {
      return false;
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics

AttackMetrics metrics_from_counts(const SwitchCounts& c, bool careless) {
  AttackMetrics m;
  if (c.ats_adv > 0) m.success_rate = pct(c.desired, c.ats_adv);
  if (careless) {
    const auto den = c.nonats_adv + c.added;
    if (den > 0) m.collateral_damage = pct(c.undesired_adv, den);
  } else {
    const auto den = c.nonats_adv + c.nonats_web + c.added;
    if (den > 0) m.collateral_damage = pct(c.undesired, den);
  }
  if (c.ats_web > 0) m.other_changes = pct(c.neutral, c.ats_web);
  return m;
}

SwitchCounts count_switches(const std::map<NodeId, int>& pre, const std::map<NodeId, int>& post,
                            const std::set<NodeId>& adversary_nodes) {
  SwitchCounts c;
  for (const auto& [node, before] : pre) {
    auto it = post.find(node);
    if (it == post.end()) throw InvariantViolation("post-attack predictions lost a node");
    const int after = it->second;
    const bool adv = adversary_nodes.count(node) > 0;
    if (adv) {
      (before == 1 ? c.ats_adv : c.nonats_adv) += 1;
    } else {
      (before == 1 ? c.ats_web : c.nonats_web) += 1;
    }
    if (before == 1 && after == 0) (adv ? c.desired : c.neutral) += 1;
    if (before == 0 && after == 1) {
      c.undesired += 1;
      if (adv) c.undesired_adv += 1;
    }
  }
  for (const auto& [node, after] : post) {
    if (pre.count(node)) continue;
    c.added += 1;
    if (after == 1) {
      c.undesired += 1;
      c.undesired_adv += 1;
    }
  }
  return c;
}

MetricsResult compute_metrics(const std::map<NodeId, int>& pre, const std::map<NodeId, int>& post,
                              const std::set<NodeId>& adversary_nodes, bool careless) {
  MetricsResult r;
  r.counts = count_switches(pre, post, adversary_nodes);
  r.metrics = metrics_from_counts(r.counts, careless);
  return r;
}

// ---------------------------------------------------------------------------
// Content mutation

std::string_view to_string(UrlPolicy p) {
  switch (p) {
    case UrlPolicy::Domain: return "domain";
    case UrlPolicy::Subdomain: return "subdomain";
    case UrlPolicy::Both: return "both";
    case UrlPolicy::QueryCount: return "query_count";
    case UrlPolicy::QueryNames: return "query_names";
    case UrlPolicy::QueryValues: return "query_values";
  }
  return "?";
}

std::optional<UrlPolicy> parse_url_policy(std::string_view s) {
  for (auto p : {UrlPolicy::Domain, UrlPolicy::Subdomain, UrlPolicy::Both, UrlPolicy::QueryCount,
                 UrlPolicy::QueryNames, UrlPolicy::QueryValues}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::vector<UrlPolicy> parse_url_policies(std::string_view s) {
  std::vector<UrlPolicy> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto item = s.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - start);
    if (!item.empty()) {
      auto p = parse_url_policy(item);
      if (!p) throw DataError("unknown URL mutation policy '" + std::string(item) + "'");
      if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string mutate_url_content(std::string_view url, const std::vector<UrlPolicy>& policy, Rng& rng,
                               const PublicSuffixList* suffixes) {
  auto parsed = parse_url(url);
  if (!parsed) throw UnparseableUrl(std::string(url));
  auto has = [&](UrlPolicy p) { return std::find(policy.begin(), policy.end(), p) != policy.end(); };
  const bool domain = has(UrlPolicy::Domain) || has(UrlPolicy::Both);
  const bool subdomain = has(UrlPolicy::Subdomain) || has(UrlPolicy::Both);

  if (domain || subdomain) {
    const auto& psl = psl_or_bundled(suffixes);
    const std::string site = psl.site_of(parsed->host);
    std::string sub = parsed->host.size() > site.size()
                          ? parsed->host.substr(0, parsed->host.size() - site.size() - 1)
                          : std::string();
    std::string reg_label = site, suffix;
    if (auto dot = site.find('.'); dot != std::string::npos) {
      reg_label = site.substr(0, dot);
      suffix = site.substr(dot);
    }
    if (domain) {
      std::string fresh;
      do {
        fresh = rng.token(10);
      } while (fresh == reg_label);
      reg_label = fresh;
    }
    if (subdomain) {
      std::string fresh;
      do {
        fresh = rng.token(6);
      } while (fresh == sub);
      sub = fresh;
    }
    parsed->host = (sub.empty() ? "" : sub + ".") + reg_label + suffix;
  }

  auto params = split_query(parsed->query);
  if (has(UrlPolicy::QueryNames)) {
    for (auto& p : params) p.name = rng.token(std::max<std::size_t>(3, p.name.size()));
  }
  if (has(UrlPolicy::QueryValues)) {
    for (auto& p : params) {
      if (p.has_value) p.value = rng.alnum(std::max<std::size_t>(4, p.value.size()));
    }
  }
  if (has(UrlPolicy::QueryCount)) {
    const auto extra = static_cast<std::size_t>(rng.uniform_int(1, 3));
    for (std::size_t i = 0; i < extra; ++i) {
      params.push_back({rng.token(4), rng.alnum(8), true});
    }
  }
  if (has(UrlPolicy::QueryNames) || has(UrlPolicy::QueryValues) || has(UrlPolicy::QueryCount)) {
    parsed->query = join_query(params);
    parsed->has_query = !params.empty() || parsed->has_query;
  }
  return parsed->to_string();
}

std::string collude_first_party(std::string_view url, std::string_view first_party, Rng& rng) {
  auto parsed = parse_url(url);
  if (!parsed) throw UnparseableUrl(std::string(url));
  parsed->host = rng.token(8) + "." + std::string(first_party);
  return parsed->to_string();
}

// ---------------------------------------------------------------------------
// Adversary

std::set<NodeId> AdversaryScope::network_nodes(const PageGraph& graph) const {
  std::set<NodeId> out;
  for (auto n : nodes) {
    if (n < graph.node_count() && graph.node(n).is(NodeKind::Network)) out.insert(n);
  }
  return out;
}

std::vector<std::string> ats_third_parties(const PageGraph& graph,
                                           const std::map<NodeId, int>& predictions,
                                           const PublicSuffixList* suffixes) {
  const auto& psl = psl_or_bundled(suffixes);
  std::set<std::string> out;
  for (const auto& [node, label] : predictions) {
    if (label != 1) continue;
    const auto site = site_of_url(graph.node(node).network().url, psl);
    if (!site.empty() && site != graph.page().first_party) out.insert(site);
  }
  return {out.begin(), out.end()};
}

std::optional<std::string> select_adversary(const PageGraph& graph,
                                            const std::map<NodeId, int>& predictions,
                                            const PublicSuffixList* suffixes) {
  const auto& psl = psl_or_bundled(suffixes);
  std::map<std::string, std::size_t> counts;
  for (const auto& [node, label] : predictions) {
    if (label != 1) continue;
    const auto site = site_of_url(graph.node(node).network().url, psl);
    if (!site.empty() && site != graph.page().first_party) counts[site] += 1;
  }
  std::optional<std::string> best;
  std::size_t best_count = 0;
  for (const auto& [site, count] : counts) {  // map order gives the lexicographic tie-break
    if (count > best_count) {
      best = site;
      best_count = count;
    }
  }
  return best;
}

AdversaryScope adversary_scope(const PageGraph& graph, const std::string& domain,
                               const PublicSuffixList* suffixes) {
  const auto& psl = psl_or_bundled(suffixes);
  AdversaryScope scope;
  scope.domain = domain;
  std::deque<NodeId> queue;
  auto add = [&](NodeId v) {
    if (scope.nodes.insert(v).second) queue.push_back(v);
  };
  std::vector<char> on_domain(graph.node_count(), 0);
  for (const auto& n : graph.nodes()) {
    if (n.is(NodeKind::Network)) {
      on_domain[n.id] = site_of_url(n.network().url, psl) == domain;
    } else if (n.is(NodeKind::Script) && n.script().url) {
      on_domain[n.id] = site_of_url(*n.script().url, psl) == domain;
    }
    if (on_domain[n.id]) add(n.id);
  }
  // Cookies the browser sends to the adversary belong to the adversary.
  for (const auto& e : graph.edges()) {
    if (e.kind == EdgeKind::StorageGet && on_domain[e.dst] &&
        graph.node(e.dst).is(NodeKind::Network)) {
      add(e.src);
    }
  }
  std::vector<std::vector<NodeId>> children(graph.node_count());
  for (const auto& e : graph.edges()) {
    if (e.kind == EdgeKind::Creates || e.kind == EdgeKind::InitiatesRequest ||
        e.kind == EdgeKind::StorageSet) {
      children[e.src].push_back(e.dst);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (auto c : children[v]) add(c);
  }
  return scope;
}

// ---------------------------------------------------------------------------
// Structure mutation

std::string describe(const Mutation& m) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AddResource>) {
          return "add_resource(" + std::to_string(x.parent) + ")";
        } else if constexpr (std::is_same_v<T, Reroute>) {
          std::string s = "reroute(" + std::to_string(x.head) + ":";
          for (std::size_t i = 0; i < x.scripts.size(); ++i) {
            s += (i ? "|" : "") + std::to_string(x.scripts[i]);
          }
          return s + ")";
        } else {
          return "obfuscate(" + std::to_string(x.storage) + ")";
        }
      },
      m);
}

std::vector<NodeId> redirect_chain(const PageGraph& graph, NodeId head) {
  std::vector<NodeId> chain{head};
  std::set<NodeId> seen{head};
  NodeId cur = head;
  while (true) {
    std::optional<NodeId> next;
    for (const auto& e : graph.edges()) {
      if (e.kind == EdgeKind::Redirect && e.src == cur) {
        next = e.dst;
        break;
      }
    }
    if (!next || !seen.insert(*next).second) break;
    chain.push_back(*next);
    cur = *next;
  }
  return chain;
}

std::string obfuscate_value(std::string_view value) {
  return hex_encode(std::string(value.rbegin(), value.rend()));
}

namespace {

/// Replaces whole path segments and query values equal to a key of
/// `replace`. Returns nullopt when nothing matched.
std::optional<std::string> rewrite_url_tokens(const std::string& raw,
                                              const std::map<std::string, std::string>& replace) {
  auto url = parse_url(raw);
  if (!url) return std::nullopt;
  bool changed = false;
  std::string path;
  std::size_t start = 0;
  while (start < url->path.size()) {
    auto slash = url->path.find('/', start);
    auto end = slash == std::string::npos ? url->path.size() : slash;
    std::string seg = url->path.substr(start, end - start);
    if (auto it = replace.find(seg); !seg.empty() && it != replace.end()) {
      seg = it->second;
      changed = true;
    }
    path += seg;
    if (slash != std::string::npos) path += '/';
    start = end + 1;
  }
  if (!url->path.empty() && url->path.back() == '/' && (path.empty() || path.back() != '/')) {
    path += '/';
  }
  auto params = split_query(url->query);
  for (auto& p : params) {
    if (p.has_value && p.value.empty()) continue;
    std::string& token = p.has_value ? p.value : p.name;
    if (auto it = replace.find(token); it != replace.end()) {
      token = it->second;
      changed = true;
    }
  }
  if (!changed) return std::nullopt;
  url->path = path;
  url->query = join_query(params);
  return url->to_string();
}

}  // namespace

PageGraph apply_mutation(const PageGraph& graph, const Mutation& m, const MutationContext& ctx) {
  PageGraph g = graph;
  if (const auto* add = std::get_if<AddResource>(&m)) {
    if (add->parent >= g.node_count() || g.node(add->parent).is(NodeKind::Storage)) {
      throw InvalidMutation("add_resource needs an existing non-storage parent");
    }
    const auto id = g.add_node(
        g.max_ts() + 1,
        NetworkAttrs{"added-" + std::to_string(g.node_count()), add->url, add->type});
    g.add_edge({add->parent, id, EdgeKind::InitiatesRequest});
    g.canonicalize();
  } else if (const auto* rr = std::get_if<Reroute>(&m)) {
    if (rr->head >= g.node_count()) throw InvalidMutation("reroute head does not exist");
    const auto chain = redirect_chain(g, rr->head);
    if (chain.size() < 2) throw InvalidMutation("reroute needs a redirect chain of length >= 2");
    if (rr->scripts.size() != chain.size() - 1) {
      throw InvalidMutation("reroute needs one script per redirect hop");
    }
    for (auto s : rr->scripts) {
      if (s >= g.node_count() || !g.node(s).is(NodeKind::Script)) {
        throw InvalidMutation("reroute target is not a script");
      }
    }
    std::set<std::pair<NodeId, NodeId>> hops;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) hops.insert({chain[i], chain[i + 1]});
    g.remove_edges_if([&](const Edge& e) {
      return e.kind == EdgeKind::Redirect && hops.count({e.src, e.dst});
    });
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      g.add_edge({rr->scripts[i], chain[i + 1], EdgeKind::InitiatesRequest});
    }
    g.canonicalize();
  } else {
    const auto& ob = std::get<Obfuscate>(m);
    if (ob.storage >= g.node_count() || !g.node(ob.storage).is(NodeKind::Storage)) {
      throw InvalidMutation("obfuscate needs a storage node");
    }
    std::map<std::string, std::string> replace;
    for (const auto& v : g.node(ob.storage).storage().values) {
      if (v.size() < ctx.graph_config.min_value_len) continue;
      const auto hidden = ctx.obfuscate(v);
      for (auto t : kAllTransforms) replace.emplace(apply_transform(t, v), hidden);
    }
    for (const auto& n : graph.nodes()) {
      if (!n.is(NodeKind::Network)) continue;
      if (auto rewritten = rewrite_url_tokens(n.network().url, replace)) {
        g.set_url(n.id, std::move(*rewritten));
      }
    }
    g.recompute_shared_values(ctx.graph_config);
  }
  return g;
}

std::vector<Mutation> candidate_mutations(const PageGraph& graph, const CandidateRequest& req) {
  if (!req.scope) throw InvariantViolation("candidate request without adversary scope");
  std::vector<Mutation> out;
  std::set<NodeId> sampled;
  for (auto v : req.sampled) {
    if (v < graph.node_count()) sampled.insert(v);
  }

  if (graph.node_count() + 1 <= req.max_nodes) {
    std::vector<NodeId> parents;
    if (req.collusion) {
      for (const auto& n : graph.nodes()) {
        if (!n.is(NodeKind::Storage)) parents.push_back(n.id);
      }
    } else {
      for (auto v : sampled) {
        if (!graph.node(v).is(NodeKind::Storage) && is_structural_leaf(graph, v)) {
          parents.push_back(v);
        }
      }
    }
    for (auto p : parents) {
      Rng rng = Rng::derive(req.seed, {1, req.iteration, p});
      out.push_back(AddResource{p, ResourceType::Image,
                                "http://" + req.scope->domain + "/" + rng.token(10) + ".gif"});
    }
  }

  std::vector<NodeId> scripts;
  for (auto v : req.scope->nodes) {
    if (v < graph.node_count() && graph.node(v).is(NodeKind::Script)) scripts.push_back(v);
  }
  if (!scripts.empty()) {
    std::set<NodeId> has_redirect_in;
    std::set<NodeId> heads;
    for (const auto& e : graph.edges()) {
      if (e.kind == EdgeKind::Redirect) has_redirect_in.insert(e.dst);
    }
    for (const auto& e : graph.edges()) {
      if (e.kind == EdgeKind::Redirect && !has_redirect_in.count(e.src)) heads.insert(e.src);
    }
    for (auto h : heads) {
      const auto chain = redirect_chain(graph, h);
      if (chain.size() < 2) continue;
      const bool touched = std::any_of(chain.begin(), chain.end(),
                                       [&](NodeId v) { return sampled.count(v) > 0; });
      if (!touched) continue;
      Rng rng = Rng::derive(req.seed, {2, req.iteration, h});
      Reroute r{h, {}};
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) r.scripts.push_back(rng.pick(scripts));
      out.push_back(std::move(r));
    }
  }

  for (auto v : sampled) {
    if (!graph.node(v).is(NodeKind::Storage)) continue;
    const bool shared = std::any_of(graph.edges().begin(), graph.edges().end(), [&](const Edge& e) {
      return e.kind == EdgeKind::SharedValue && e.src == v;
    });
    if (shared) out.push_back(Obfuscate{v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json counts_json(const SwitchCounts& c) {
  return {{"ats_adv", c.ats_adv},       {"nonats_adv", c.nonats_adv},
          {"ats_web", c.ats_web},       {"nonats_web", c.nonats_web},
          {"desired", c.desired},       {"undesired", c.undesired},
          {"undesired_adv", c.undesired_adv}, {"neutral", c.neutral},
          {"added", c.added}};
}

SwitchCounts counts_from(const json& j) {
  SwitchCounts c;
  c.ats_adv = j.at("ats_adv");
  c.nonats_adv = j.at("nonats_adv");
  c.ats_web = j.at("ats_web");
  c.nonats_web = j.at("nonats_web");
  c.desired = j.at("desired");
  c.undesired = j.at("undesired");
  c.undesired_adv = j.at("undesired_adv");
  c.neutral = j.at("neutral");
  c.added = j.at("added");
  return c;
}

json metrics_json(const AttackMetrics& m) {
  return {{"success_rate", optional_json(m.success_rate)},
          {"collateral_damage", optional_json(m.collateral_damage)},
          {"other_changes", optional_json(m.other_changes)}};
}

AttackMetrics metrics_from(const json& j) {
  return {optional_from(j.at("success_rate")), optional_from(j.at("collateral_damage")),
          optional_from(j.at("other_changes"))};
}

json mutation_json(const Mutation& m) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AddResource>) {
          return {{"type", "add_resource"},
                  {"parent", x.parent},
                  {"resource_type", to_string(x.type)},
                  {"url", x.url}};
        } else if constexpr (std::is_same_v<T, Reroute>) {
          return {{"type", "reroute"}, {"head", x.head}, {"scripts", x.scripts}};
        } else {
          return {{"type", "obfuscate"}, {"storage", x.storage}};
        }
      },
      m);
}

Mutation mutation_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "add_resource") {
    auto rt = parse_resource_type(j.at("resource_type").get<std::string>());
    if (!rt) throw DataError("unknown resource type in mutation");
    return AddResource{j.at("parent").get<NodeId>(), *rt, j.at("url").get<std::string>()};
  }
  if (type == "reroute") {
    return Reroute{j.at("head").get<NodeId>(), j.at("scripts").get<std::vector<NodeId>>()};
  }
  if (type == "obfuscate") return Obfuscate{j.at("storage").get<NodeId>()};
  throw DataError("unknown mutation type '" + type + "'");
}

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

json attack_config_to_json(const AttackConfig& c) {
  json policy = json::array();
  for (auto p : c.policy) policy.push_back(to_string(p));
  return {{"policy", policy},       {"collusion", c.collusion}, {"careless", c.careless},
          {"max_iter", c.max_iter}, {"growth_cap", c.growth_cap}, {"l_T", c.l_T},
          {"seed", c.seed},         {"bins", c.bins},         {"pages_per_bin", c.pages_per_bin},
          {"max_nodes", c.max_nodes}};
}

AttackConfig attack_config_from_json(const json& j) {
  try {
    AttackConfig c;
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      if (p.is_string()) {
        c.policy = parse_url_policies(p.get<std::string>());
      } else {
        for (const auto& item : p) {
          auto parsed = parse_url_policy(item.get<std::string>());
          if (!parsed) throw DataError("unknown URL mutation policy");
          c.policy.push_back(*parsed);
        }
      }
    }
    c.collusion = j.value("collusion", c.collusion);
    c.careless = j.value("careless", c.careless);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.growth_cap = j.value("growth_cap", c.growth_cap);
    if (j.contains("l_T")) {
      const auto& l = j.at("l_T");
      c.l_T = l.is_string() && l.get<std::string>() == "all" ? 0 : l.get<std::size_t>();
    }
    c.seed = j.value("seed", c.seed);
    c.bins = j.value("bins", c.bins);
    c.pages_per_bin = j.value("pages_per_bin", c.pages_per_bin);
    c.max_nodes = j.value("max_nodes", c.max_nodes);
    if (c.growth_cap < 0) throw DataError("growth_cap must be non-negative");
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed attack config: ") + e.what());
  }
}

json attack_report_to_json(const AttackReport& r) {
  json traj = json::array();
  for (const auto& it : r.trajectory) {
    traj.push_back({{"iteration", it.iteration},
                    {"mutation", mutation_json(it.mutation)},
                    {"delta", it.delta},
                    {"candidates", it.candidates},
                    {"counts", counts_json(it.counts)},
                    {"metrics", metrics_json(it.metrics)},
                    {"node_count", it.node_count},
                    {"growth", it.growth}});
  }
  return {{"kind", r.kind},
          {"page_id", r.page_id},
          {"adversary", r.adversary},
          {"feature_set", r.feature_set},
          {"careless", r.careless},
          {"no_adversary_ats", r.no_adversary_ats},
          {"no_candidates", r.no_candidates},
          {"counts", counts_json(r.counts)},
          {"metrics", metrics_json(r.metrics)},
          {"growth_used", r.growth_used},
          {"trajectory", std::move(traj)}};
}

AttackReport attack_report_from_json(const json& j) {
  try {
    AttackReport r;
    r.kind = j.at("kind");
    r.page_id = j.at("page_id");
    r.adversary = j.at("adversary");
    r.feature_set = j.at("feature_set");
    r.careless = j.at("careless");
    r.no_adversary_ats = j.at("no_adversary_ats");
    r.no_candidates = j.at("no_candidates");
    r.counts = counts_from(j.at("counts"));
    r.metrics = metrics_from(j.at("metrics"));
    r.growth_used = j.at("growth_used");
    for (const auto& t : j.at("trajectory")) {
      IterationRecord it;
      it.iteration = t.at("iteration");
      it.mutation = mutation_from(t.at("mutation"));
      it.delta = t.at("delta");
      it.candidates = t.at("candidates");
      it.counts = counts_from(t.at("counts"));
      it.metrics = metrics_from(t.at("metrics"));
      it.node_count = t.at("node_count");
      it.growth = t.at("growth");
      r.trajectory.push_back(std::move(it));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed attack report: ") + e.what());
  }
}

std::string trajectory_csv(const AttackReport& r) {
  std::ostringstream out;
  out << "iteration,mutation,delta,candidates,desired,undesired,neutral,success_rate,"
         "collateral_damage,other_changes,node_count,growth\n";
  for (const auto& it : r.trajectory) {
    out << it.iteration << ',' << describe(it.mutation) << ',' << it.delta << ',' << it.candidates
        << ',' << it.counts.desired << ',' << it.counts.undesired << ',' << it.counts.neutral << ','
        << opt_csv(it.metrics.success_rate) << ',' << opt_csv(it.metrics.collateral_damage) << ','
        << opt_csv(it.metrics.other_changes) << ',' << it.node_count << ','
        << format_double(it.growth) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Attacks

std::map<NodeId, int> classify_graph(const PageGraph& graph, const AttackEnv& env) {
  if (!env.model) throw InvariantViolation("attack environment without a model");
  const auto m = extract_matrix(graph, env.feature_set, env.features);
  std::map<NodeId, int> out;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    out[m.node_ids[i]] = env.model->predict(m.rows[i]).label;
  }
  return out;
}

AttackReport run_content_attack(const PageGraph& graph, const AttackEnv& env,
                                const AdversaryScope& adversary, const AttackConfig& config,
                                PageGraph* mutated) {
  AttackReport report;
  report.kind = "content";
  report.page_id = graph.page().page_id;
  report.adversary = adversary.domain;
  report.feature_set = std::string(to_string(env.feature_set));
  report.careless = config.careless;

  const auto pre = classify_graph(graph, env);
  const auto adv_nodes = adversary.network_nodes(graph);
  std::vector<NodeId> targets;
  for (auto v : adv_nodes) {
    if (pre.at(v) == 1) targets.push_back(v);
  }

  PageGraph g = graph;
  if (targets.empty()) {
    report.no_adversary_ats = true;
  } else {
    std::vector<UrlPolicy> policy = config.policy;
    if (config.collusion) {
      // The host is dictated by the first party; only query rewrites remain.
      std::erase_if(policy, [](UrlPolicy p) {
        return p == UrlPolicy::Domain || p == UrlPolicy::Subdomain || p == UrlPolicy::Both;
      });
    }
    const auto page_key = fnv1a(graph.page().page_id) ^ mix64(fnv1a(adversary.domain));
    for (auto v : targets) {
      Rng rng = Rng::derive(config.seed, {0xC0, page_key, v});
      std::string url = graph.node(v).network().url;
      if (config.collusion) url = collude_first_party(url, graph.page().first_party, rng);
      if (!policy.empty()) url = mutate_url_content(url, policy, rng, env.features.suffixes);
      g.set_url(v, std::move(url));
    }
    g.recompute_shared_values(env.mutation.graph_config);
  }
  const auto post = targets.empty() ? pre : classify_graph(g, env);
  const auto result = compute_metrics(pre, post, adv_nodes, config.careless);
  report.counts = result.counts;
  report.metrics = result.metrics;
  if (mutated) *mutated = std::move(g);
  return report;
}

AttackReport greedy_attack(const PageGraph& graph, const AttackEnv& env,
                           const AdversaryScope& adversary, const AttackConfig& config,
                           PageGraph* mutated) {
  AttackReport report;
  report.kind = "structure";
  report.page_id = graph.page().page_id;
  report.adversary = adversary.domain;
  report.feature_set = std::string(to_string(env.feature_set));
  report.careless = config.careless;

  const auto pre = classify_graph(graph, env);
  const auto adv_nodes = adversary.network_nodes(graph);
  {
    const auto baseline = compute_metrics(pre, pre, adv_nodes, config.careless);
    report.counts = baseline.counts;
    report.metrics = baseline.metrics;
  }
  if (report.counts.ats_adv == 0) {
    report.no_adversary_ats = true;
    if (mutated) *mutated = graph;
    return report;
  }

  const std::size_t n0 = graph.node_count();
  const auto max_nodes = static_cast<std::size_t>(
      std::floor(static_cast<double>(n0) * (1.0 + config.growth_cap) + 1e-9));
  AdversaryScope scope = adversary;
  auto sample = [&](std::size_t iteration) {
    std::vector<NodeId> pool(scope.nodes.begin(), scope.nodes.end());
    const std::size_t l = config.l_T == 0 ? pool.size() : std::min(pool.size(), config.l_T);
    Rng rng = Rng::derive(config.seed, {0x5A, iteration});
    rng.shuffle(pool);
    pool.resize(l);
    std::sort(pool.begin(), pool.end());
    return pool;
  };

  PageGraph g = graph;
  auto sampled = sample(0);
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    CandidateRequest req{&scope, sampled, config.collusion, max_nodes, config.seed, iter};
    const auto candidates = candidate_mutations(g, req);
    if (candidates.empty()) {
      report.no_candidates = true;
      break;
    }
    std::optional<PageGraph> best_graph;
    std::size_t best_index = 0;
    long best_delta = 0;
    MetricsResult best_metrics;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      auto gc = apply_mutation(g, candidates[c], env.mutation);
      if (gc.node_count() < g.node_count()) throw InvariantViolation("mutation removed nodes");
      if (gc.node_count() > max_nodes) throw InvariantViolation("growth cap exceeded");
      const auto post = classify_graph(gc, env);
      auto mr = compute_metrics(pre, post, adv_nodes, config.careless);
      const long delta =
          static_cast<long>(mr.counts.desired) -
          static_cast<long>(config.careless ? mr.counts.undesired_adv : mr.counts.undesired);
      if (!best_graph || delta > best_delta) {
        best_graph = std::move(gc);
        best_index = c;
        best_delta = delta;
        best_metrics = std::move(mr);
      }
    }
    const std::size_t before = g.node_count();
    g = std::move(*best_graph);
    for (NodeId v = static_cast<NodeId>(before); v < g.node_count(); ++v) scope.nodes.insert(v);

    IterationRecord rec;
    rec.iteration = iter;
    rec.mutation = candidates[best_index];
    rec.delta = best_delta;
    rec.candidates = candidates.size();
    rec.counts = best_metrics.counts;
    rec.metrics = best_metrics.metrics;
    rec.node_count = g.node_count();
    rec.growth = 100.0 * static_cast<double>(g.node_count() - n0) / static_cast<double>(n0);
    report.trajectory.push_back(rec);
    report.counts = rec.counts;
    report.metrics = rec.metrics;
    report.growth_used = rec.growth;
    sampled = sample(iter + 1);
  }
  if (mutated) *mutated = std::move(g);
  return report;
}

std::vector<std::string> select_pages_by_size(const std::map<std::string, std::size_t>& sizes,
                                              std::size_t bins, std::size_t per_bin,
                                              std::size_t max_nodes, std::uint64_t seed) {
  if (bins == 0) throw DataError("bins must be positive");
  std::vector<std::pair<std::size_t, std::string>> eligible;
  for (const auto& [id, n] : sizes) {
    if (n <= max_nodes) eligible.push_back({n, id});
  }
  std::sort(eligible.begin(), eligible.end());
  std::vector<std::string> out;
  const std::size_t total = eligible.size();
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * total / bins, hi = (b + 1) * total / bins;
    std::vector<std::string> bin;
    for (std::size_t i = lo; i < hi; ++i) bin.push_back(eligible[i].second);
    Rng rng = Rng::derive(seed, {0xB1, b});
    rng.shuffle(bin);
    if (bin.size() > per_bin) bin.resize(per_bin);
    out.insert(out.end(), bin.begin(), bin.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

AttackSummary summarize_reports(const std::vector<AttackReport>& reports, bool careless) {
  AttackSummary s;
  std::vector<double> success, collateral;
  for (const auto& r : reports) {
    auto& t = s.totals;
    t.ats_adv += r.counts.ats_adv;
    t.nonats_adv += r.counts.nonats_adv;
    t.ats_web += r.counts.ats_web;
    t.nonats_web += r.counts.nonats_web;
    t.desired += r.counts.desired;
    t.undesired += r.counts.undesired;
    t.undesired_adv += r.counts.undesired_adv;
    t.neutral += r.counts.neutral;
    t.added += r.counts.added;
    if (r.metrics.success_rate) success.push_back(*r.metrics.success_rate);
    if (r.metrics.collateral_damage) collateral.push_back(*r.metrics.collateral_damage);
  }
  s.pooled = metrics_from_counts(s.totals, careless);
  s.success = mean_std(success);
  s.collateral = mean_std(collateral);
  s.reports = reports.size();
  return s;
}

std::string success_collateral_csv(const std::vector<AttackReport>& reports) {
  std::ostringstream out;
  out << "page_id,adversary,ats_adv,desired,undesired,neutral,success_rate,collateral_damage,"
         "other_changes\n";
  for (const auto& r : reports) {
    out << r.page_id << ',' << r.adversary << ',' << r.counts.ats_adv << ',' << r.counts.desired
        << ',' << r.counts.undesired << ',' << r.counts.neutral << ','
        << opt_csv(r.metrics.success_rate) << ',' << opt_csv(r.metrics.collateral_damage) << ','
        << opt_csv(r.metrics.other_changes) << '\n';
  }
  return out.str();
}

}  // namespace webgraph
