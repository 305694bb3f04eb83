// Runs the nine acceptance criteria and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "webgraph/attack.hpp"
#include "webgraph/corpus.hpp"
#include "webgraph/eventlog.hpp"
#include "webgraph/io.hpp"
#include "webgraph/url.hpp"

using namespace webgraph;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

NodeId request_node(const PageGraph& g, const std::string& request_id) {
  for (const auto& n : g.nodes()) {
    if (n.is(NodeKind::Network) && n.network().request_id == request_id) return n.id;
  }
  throw std::runtime_error("fixture has no request " + request_id);
}

NodeId storage_node(const PageGraph& g, const std::string& key) {
  for (const auto& n : g.nodes()) {
    if (n.is(NodeKind::Storage) && n.storage().key == key) return n.id;
  }
  throw std::runtime_error("fixture has no storage key " + key);
}

bool has_edge(const PageGraph& g, NodeId s, NodeId d, EdgeKind k) {
  for (const auto& e : g.edges()) {
    if (e.src == s && e.dst == d && e.kind == k) return true;
  }
  return false;
}

int lab(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  if (code != 0) std::cerr << "webgraph_lab failed (" << code << "): " << err.str();
  return code;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("webgraph_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PageSamples page_samples(const GeneratedPage& page, FeatureSetId set) {
  const auto g = build_graph(page.trace);
  const auto m = extract_matrix(g, set);
  PageSamples s;
  s.page_id = page.truth.page_id;
  s.node_ids = m.node_ids;
  s.rows = m.rows;
  for (auto v : m.node_ids) {
    s.labels.push_back(page.truth.labels.at(g.node(v).network().request_id) == Label::ATS);
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome worked_example_graph() {
  const auto t0 = Clock::now();
  const auto g = oracle::load_fixture_graph();
  const auto r5 = request_node(g, "r5"), r5b = request_node(g, "r5b"),
             r15 = request_node(g, "r15");
  const auto cookie = storage_node(g, "tracker1-id");
  if (!has_edge(g, r5, r5b, EdgeKind::Redirect)) return fail("missing Redirect r5 -> r5b");
  if (!has_edge(g, r5b, cookie, EdgeKind::StorageSet)) return fail("missing StorageSet r5b -> tracker1-id");
  if (!has_edge(g, r5b, r15, EdgeKind::SharedValue)) return fail("missing SharedValue r5b -> r15");
  const double secs = seconds_since(t0);
  if (secs >= 1.0) return fail("took " + std::to_string(secs) + " s");
  return {true, "Redirect, StorageSet and SharedValue(user1) edges present"};
}

Outcome metrics_exactness() {
  SwitchCounts c;
  c.ats_adv = 5;
  c.nonats_adv = 7;
  c.nonats_web = 62;
  c.ats_web = 13;
  c.desired = 3;
  c.undesired = 7;
  c.neutral = 1;
  const auto m = metrics_from_counts(c, false);
  if (!m.success_rate || !m.collateral_damage || !m.other_changes) return fail("undefined metric");
  std::ostringstream d;
  d.precision(4);
  d << std::fixed << "success " << *m.success_rate << "%, collateral " << *m.collateral_damage
    << "%, other " << *m.other_changes << "%";
  const bool ok = std::abs(*m.success_rate - 60.00) <= 0.01 &&
                  std::abs(*m.collateral_damage - 10.14) <= 0.01 &&
                  std::abs(*m.other_changes - 7.69) <= 0.01;
  return {ok, d.str()};
}

Outcome robustness_contrast() {
  const auto t0 = Clock::now();
  const auto root = scratch("contrast");
  const auto cfg = root / "config.json";
  write_file_atomic(cfg, R"({"model": {"n_trees": 30}})");
  const std::vector<std::string> common{"--config", cfg.string(), "--seed", "7", "--jobs", "2"};
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), common.begin(), common.end());
    return lab(args) == 0;
  };
  const auto p = [&](const std::string& sub) { return (root / sub).string(); };
  if (!run({"gen", "--n-pages", "200", "--out", p("corpus")}) ||
      !run({"build", "--corpus", p("corpus"), "--out", p("graphs")}) ||
      !run({"label", "--graphs", p("graphs"), "--rules", p("corpus/rules.txt"), "--out", p("labels")})) {
    return fail("corpus preparation failed");
  }
  std::map<std::string, double> success;
  for (const std::string set : {"adgraph_full", "webgraph_flowonly"}) {
    const auto t_set = Clock::now();
    if (!run({"features", "--graphs", p("graphs"), "--feature-set", set, "--out", p("features_" + set)}) ||
        !run({"eval", "--features", p("features_" + set), "--labels", p("labels"), "--out",
              p("eval_" + set)}) ||
        !run({"attack-content", "--graphs", p("graphs"), "--eval", p("eval_" + set), "--feature-set",
              set, "--collusion", "--policy", "query_count,query_names,query_values", "--out",
              p("attack_" + set)})) {
      return fail(set + " run failed");
    }
    const auto summary = nlohmann::json::parse(read_file(root / ("attack_" + set) / "summary.json"));
    if (summary["pooled"]["success_rate"].is_null()) return fail(set + ": no adversary ATS nodes");
    success[set] = summary["pooled"]["success_rate"].get<double>();
    if (seconds_since(t_set) >= 600) return fail(set + " run exceeded 10 minutes");
  }
  fs::remove_all(root);
  const double ad = success["adgraph_full"], flow = success["webgraph_flowonly"];
  std::ostringstream d;
  d.precision(2);
  d << std::fixed << "adgraph_full " << ad << "% vs webgraph_flowonly " << flow << "% ("
    << seconds_since(t0) << " s)";
  return {ad > 0 && ad >= 5 * flow, d.str()};
}

Outcome info_gain_oracle() {
  Rng rng(4242);
  double worst = 0;
  for (int col = 0; col < 1000; ++col) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(8, 32));
    std::vector<double> v(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::round(rng.uniform01() * 20.0) / 4.0;
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const double t = v[rng.uniform(n)];
    worst = std::max(worst, std::abs(info_gain(v, y, t) - oracle::info_gain(v, y, t)));
  }
  std::ostringstream d;
  d << "max |difference| " << worst << " over 1000 columns";
  return {worst <= 1e-9, d.str()};
}

// Replays every committed greedy step and recomputes Delta for every candidate.
Outcome greedy_is_exhaustive() {
  CorpusSpec spec;
  spec.seed = 31;
  std::vector<PageSamples> pages;
  for (std::size_t p = 0; p < 40; ++p) pages.push_back(page_samples(generate_page(spec, p), FeatureSetId::WebgraphFull));
  Dataset data;
  data.feature_names = feature_names(FeatureSetId::WebgraphFull);
  for (const auto& s : pages) {
    data.rows.insert(data.rows.end(), s.rows.begin(), s.rows.end());
    data.labels.insert(data.labels.end(), s.labels.begin(), s.labels.end());
  }
  Hyperparams hp;
  hp.n_trees = 25;
  const auto model = train(data, hp, 3, "webgraph_full");
  AttackEnv env;
  env.model = &model;
  env.feature_set = FeatureSetId::WebgraphFull;

  auto predict_all = [&](const PageGraph& g) {
    const auto m = extract_matrix(g, FeatureSetId::WebgraphFull);
    std::map<NodeId, int> out;
    for (std::size_t i = 0; i < m.rows.size(); ++i) out[m.node_ids[i]] = model.predict(m.rows[i]).label;
    return out;
  };

  Rng rng(99);
  std::size_t graphs = 0, steps = 0, index = 0;
  while (graphs < 20) {
    if (index > 2000) return fail("could not find 20 attackable small graphs");
    const auto g = build_graph(parse_trace(oracle::small_trace(rng, index++)));
    if (g.node_count() > 10) return fail("generated graph has more than 10 nodes");
    const auto pre = predict_all(g);
    const auto adv = select_adversary(g, pre);
    if (!adv) continue;
    const auto scope = adversary_scope(g, *adv);
    std::set<NodeId> adv_network;
    for (auto v : scope.nodes) {
      if (g.node(v).is(NodeKind::Network)) adv_network.insert(v);
    }
    AttackConfig cfg;
    cfg.max_iter = 5;
    cfg.l_T = 0;  // sample all of T
    cfg.seed = index;
    const auto report = greedy_attack(g, env, scope, cfg);
    ++graphs;

    PageGraph cur = g;
    AdversaryScope t = scope;
    const auto max_nodes = static_cast<std::size_t>(std::floor(g.node_count() * 1.2 + 1e-9));
    for (const auto& rec : report.trajectory) {
      CandidateRequest req{&t, {t.nodes.begin(), t.nodes.end()}, false, max_nodes, cfg.seed,
                           rec.iteration};
      const auto candidates = candidate_mutations(cur, req);
      long best = std::numeric_limits<long>::min();
      for (const auto& m : candidates) {
        const auto post = predict_all(apply_mutation(cur, m));
        long desired = 0, undesired = 0;
        for (const auto& [v, label] : post) {
          const auto it = pre.find(v);
          if (it == pre.end()) {
            undesired += label == 1;
          } else if (it->second == 1 && label == 0 && adv_network.count(v)) {
            ++desired;
          } else if (it->second == 0 && label == 1) {
            ++undesired;
          }
        }
        best = std::max(best, desired - undesired);
      }
      if (candidates.empty() || rec.delta != best) {
        return fail("page " + g.page().page_id + " iteration " + std::to_string(rec.iteration) +
                    ": committed delta " + std::to_string(rec.delta) + ", exhaustive max " +
                    std::to_string(best));
      }
      const auto before = cur.node_count();
      cur = apply_mutation(cur, rec.mutation);
      for (NodeId v = static_cast<NodeId>(before); v < cur.node_count(); ++v) t.nodes.insert(v);
      ++steps;
    }
  }
  if (steps == 0) return fail("no greedy iterations were committed");
  return {true, std::to_string(steps) + " committed steps over 20 graphs match the exhaustive maximum"};
}

Outcome value_matching_oracle() {
  // The reference digests themselves are pinned to RFC test vectors first.
  if (oracle::transform(MatchTransform::Md5Hex, "abc") != "900150983cd24fb0d6963f7d28e17f72" ||
      oracle::transform(MatchTransform::Sha1Hex, "abc") != "a9993e364706816aba3e25717850c26c9cd0d89d" ||
      oracle::transform(MatchTransform::Base64, "foobar") != "Zm9vYmFy") {
    return fail("reference digests disagree with RFC vectors");
  }
  Rng rng(6);
  std::size_t edges = 0;
  for (int inst = 0; inst < 500; ++inst) {
    std::vector<StoredValue> values;
    const auto nv = 1 + rng.uniform(5);
    for (std::uint64_t i = 0; i < nv; ++i) {
      values.push_back({static_cast<NodeId>(i), rng.alnum(3 + rng.uniform(20))});
    }
    std::vector<RequestUrl> urls;
    const auto nu = 1 + rng.uniform(7);
    for (std::uint64_t j = 0; j < nu; ++j) {
      const auto& v = rng.pick(values).value;
      const auto carried = rng.bernoulli(0.75) ? oracle::transform(kAllTransforms[rng.uniform(4)], v)
                                               : rng.alnum(12);
      std::string url = "https://h" + std::to_string(rng.uniform(3)) + ".example/";
      switch (rng.uniform(3)) {
        case 0: url += "p/" + carried + "/x"; break;
        case 1: url += "q?a=" + rng.alnum(5) + "&id=" + carried; break;
        default: url += "q?" + carried; break;
      }
      urls.push_back({static_cast<NodeId>(50 + j), url, static_cast<std::int64_t>(rng.uniform(6))});
    }
    GraphConfig cfg;
    cfg.min_value_len = 4 + rng.uniform(6);
    const auto got = match_values(values, urls, cfg);
    if (got != oracle::match_values(values, urls, cfg.min_value_len)) {
      return fail("instance " + std::to_string(inst) + " differs from the brute-force oracle");
    }
    edges += got.size();
  }
  return {true, "500 instances identical (" + std::to_string(edges) + " edges)"};
}

Outcome protocol_invariants() {
  CorpusSpec spec;
  spec.seed = 13;
  std::vector<PageSamples> pages;
  std::vector<PageGraph> graphs;
  for (std::size_t p = 0; p < 100; ++p) {
    const auto page = generate_page(spec, p);
    graphs.push_back(build_graph(page.trace));
    pages.push_back(page_samples(page, FeatureSetId::WebgraphFull));
  }
  Hyperparams hp;
  hp.n_trees = 20;
  const auto cv = cross_validate(pages, feature_names(FeatureSetId::WebgraphFull), "webgraph_full",
                                 hp, 10, 13, 2);

  std::multiset<std::string> seen;
  for (const auto& f : cv.folds) seen.insert(f.begin(), f.end());
  std::multiset<std::string> all;
  for (const auto& p : pages) all.insert(p.page_id);
  if (cv.folds.size() != 10 || seen != all) return fail("folds are not a partition of the pages");

  for (const auto& imp : cv.fold_importances) {
    const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (std::abs(sum - 100.0) > 1e-9) return fail("fold importance sums to " + std::to_string(sum));
  }

  std::map<std::string, std::size_t> fold_of;
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    for (const auto& id : cv.folds[f]) fold_of[id] = f;
  }
  double worst = 0;
  std::size_t explained = 0;
  for (const auto& p : pages) {
    const auto& model = cv.models[fold_of.at(p.page_id)];
    for (const auto& row : p.rows) {
      const auto e = model.explain(row);
      const double total = std::accumulate(e.contributions.begin(), e.contributions.end(), e.bias);
      worst = std::max({worst, std::abs(total - e.score), std::abs(e.score - model.predict(row).score)});
      ++explained;
    }
  }
  if (worst > 1e-12) return fail("explanation identity off by " + std::to_string(worst));

  std::size_t attacked = 0, steps = 0;
  for (std::size_t p = 0; p < graphs.size() && attacked < 15; p += 3) {
    AttackEnv env;
    env.model = &cv.models[fold_of.at(pages[p].page_id)];
    env.feature_set = FeatureSetId::WebgraphFull;
    const auto adv = select_adversary(graphs[p], classify_graph(graphs[p], env));
    if (!adv) continue;
    AttackConfig cfg;
    cfg.max_iter = 12;
    cfg.collusion = attacked % 2 == 1;
    cfg.seed = p;
    PageGraph out;
    const auto r = greedy_attack(graphs[p], env, adversary_scope(graphs[p], *adv), cfg, &out);
    const std::size_t n0 = graphs[p].node_count();
    std::size_t prev = n0;
    for (const auto& rec : r.trajectory) {
      if (rec.node_count < prev) return fail("node count decreased on " + pages[p].page_id);
      if (rec.growth > 20.0 + 1e-9) return fail("growth cap exceeded on " + pages[p].page_id);
      prev = rec.node_count;
      ++steps;
    }
    if (out.node_count() * 5 > n0 * 6) return fail("final graph exceeds the cap");
    ++attacked;
  }
  std::ostringstream d;
  d << "10 page-disjoint folds, importances sum to 100, " << explained
    << " explanations exact, " << steps << " mutation steps over " << attacked
    << " attacks within the cap";
  return {attacked > 0 && steps > 0, d.str()};
}

Outcome content_independence() {
  const auto g = oracle::load_fixture_graph();
  auto renamed = g;
  for (auto v : renamed.nodes_of_kind(NodeKind::Network)) {
    auto u = *parse_url(renamed.node(v).network().url);
    u.host = "n" + std::to_string(v) + ".renamed-host.org";
    renamed.set_url(v, u.to_string());
  }
  GraphConfig cfg;
  cfg.min_value_len = 5;
  renamed.recompute_shared_values(cfg);
  if (renamed.count_edges(EdgeKind::SharedValue) != g.count_edges(EdgeKind::SharedValue)) {
    return fail("renaming severed shared-value matches");
  }
  std::size_t columns = 0;
  for (auto set : {FeatureSetId::WebgraphFlowonly, FeatureSetId::AdgraphStructural}) {
    const auto a = extract_matrix(g, set), b = extract_matrix(renamed, set);
    if (a.rows.size() != b.rows.size()) return fail("row count changed");
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      if (std::memcmp(a.rows[i].data(), b.rows[i].data(), a.rows[i].size() * sizeof(double)) != 0) {
        return fail(std::string(to_string(set)) + " row " + std::to_string(i) + " changed");
      }
    }
    columns += a.names.size();
  }
  return {true, std::to_string(columns) + " structural and flow columns bitwise unchanged"};
}

// Hashes nothing: compares every artifact byte for byte.
Outcome end_to_end_determinism() {
  const auto root = fs::temp_directory_path() / "webgraph_acceptance_determinism";
  const auto first = fs::temp_directory_path() / "webgraph_acceptance_determinism_first";
  auto pipeline = [&]() {
    fs::remove_all(root);
    fs::create_directories(root);
    const auto cfg = root / "config.json";
    write_file_atomic(cfg, R"({"model": {"n_trees": 10}, "attack": {"max_iter": 4, "pages_per_bin": 2}})");
    const auto p = [&](const std::string& sub) { return (root / sub).string(); };
    std::vector<std::vector<std::string>> steps = {
        {"gen", "--n-pages", "30", "--out", p("corpus")},
        {"build", "--corpus", p("corpus"), "--out", p("graphs")},
        {"label", "--graphs", p("graphs"), "--rules", p("corpus/rules.txt"), "--corpus", p("corpus"),
         "--out", p("labels")},
        {"features", "--graphs", p("graphs"), "--out", p("features")},
        {"train", "--features", p("features"), "--labels", p("labels"), "--out", p("model")},
        {"eval", "--features", p("features"), "--labels", p("labels"), "--folds", "5", "--out", p("eval")},
        {"attack-content", "--graphs", p("graphs"), "--eval", p("eval"), "--policy", "domain", "--out",
         p("content")},
        {"attack-structure", "--graphs", p("graphs"), "--eval", p("eval"), "--out", p("structure")},
        {"report", "--in", p("structure"), "--out", p("report")}};
    for (auto& s : steps) {
      s.insert(s.begin(), {"--config", cfg.string(), "--seed", "11", "--jobs", "2"});
      if (lab(s) != 0) return false;
    }
    return true;
  };
  if (!pipeline()) return fail("first run failed");
  fs::remove_all(first);
  fs::rename(root, first);
  if (!pipeline()) return fail("second run failed");
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), first);
    if (!fs::exists(root / rel)) return fail(rel.string() + " missing from the second run");
    if (read_file(entry.path()) != read_file(root / rel)) return fail(rel.string() + " differs");
    ++files;
  }
  std::size_t second_files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) second_files += entry.is_regular_file();
  if (second_files != files) return fail("the runs produced different file sets");
  fs::remove_all(root);
  fs::remove_all(first);
  return {true, std::to_string(files) + " artifacts byte-identical"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 worked-example graph", worked_example_graph},
      {"2 metrics exactness", metrics_exactness},
      {"3 robustness contrast", robustness_contrast},
      {"4 info-gain oracle", info_gain_oracle},
      {"5 greedy equals exhaustive", greedy_is_exhaustive},
      {"6 value-matching oracle", value_matching_oracle},
      {"7 protocol invariants", protocol_invariants},
      {"8 content independence", content_independence},
      {"9 end-to-end determinism", end_to_end_determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - failures << "/"
            << criteria.size() << std::endl;
  return failures ? 1 : 0;
}
