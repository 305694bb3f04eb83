#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "webgraph/attack.hpp"
#include "webgraph/corpus.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/eventlog.hpp"
#include "webgraph/features.hpp"
#include "webgraph/graph.hpp"
#include "webgraph/io.hpp"
#include "webgraph/labels.hpp"
#include "webgraph/model.hpp"
#include "webgraph/parallel.hpp"

namespace webgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

/// Bad flags, missing inputs and other caller mistakes.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  std::string corpus, graphs, features, labels, in, model, eval, rules, pages;
  std::string feature_set, policy;
  bool collusion = false, careless = false;
  std::optional<double> growth_cap;
  std::optional<std::size_t> max_iter, folds, n_pages;
};

struct Context {
  Options opt;
  json config = json::object();
  std::shared_ptr<spdlog::logger> log;
  std::ostream* out = nullptr;
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

fs::path require_input(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
  if (!fs::exists(value)) throw UsageError(flag + ": '" + value + "' does not exist");
  return value;
}

fs::path require_out(const Context& ctx) {
  if (ctx.opt.out.empty()) throw UsageError("--out is required");
  return ctx.opt.out;
}

std::uint64_t resolve_seed(const Context& ctx) {
  if (ctx.opt.seed) return *ctx.opt.seed;
  return ctx.config.value("seed", kDefaultSeed);
}

void echo_config(const fs::path& out_dir, json resolved) {
  write_json(out_dir / "resolved_config.json", resolved);
}

FeatureSetId resolve_feature_set(const Context& ctx) {
  std::string name = ctx.opt.feature_set;
  if (name.empty()) name = ctx.config.value("feature_set", std::string("webgraph_full"));
  auto set = parse_feature_set(name);
  if (!set) throw UsageError("--feature-set: unknown feature set '" + name + "'");
  return *set;
}

/// Training commands default to the feature set recorded with the features.
FeatureSetId resolve_training_feature_set(const Context& ctx, const fs::path& features_dir) {
  if (ctx.opt.feature_set.empty() && !ctx.config.contains("feature_set")) {
    const auto recorded = read_json(features_dir / "index.json").value("feature_set", std::string());
    if (auto set = parse_feature_set(recorded)) return *set;
  }
  return resolve_feature_set(ctx);
}

GraphConfig resolve_graph_config(const Context& ctx) {
  GraphConfig g;
  if (ctx.config.contains("graph")) {
    g.min_value_len = ctx.config["graph"].value("min_value_len", g.min_value_len);
  }
  return g;
}

Hyperparams resolve_hyperparams(const Context& ctx) {
  Hyperparams h;
  if (ctx.config.contains("model")) {
    const auto& m = ctx.config["model"];
    h.n_trees = m.value("n_trees", h.n_trees);
    h.max_depth = m.value("max_depth", h.max_depth);
    h.min_samples_split = m.value("min_samples_split", h.min_samples_split);
    h.features_per_split = m.value("features_per_split", h.features_per_split);
    h.bootstrap = m.value("bootstrap", h.bootstrap);
  }
  if (h.n_trees == 0) throw UsageError("model.n_trees must be positive");
  return h;
}

json hyperparams_json(const Hyperparams& h) {
  return {{"n_trees", h.n_trees},
          {"max_depth", h.max_depth},
          {"min_samples_split", h.min_samples_split},
          {"features_per_split", h.features_per_split},
          {"bootstrap", h.bootstrap}};
}

FeatureConfig resolve_feature_config(const Context& ctx, json& resolved) {
  FeatureConfig fc;
  const auto path = ctx.config.value("ad_keywords_file", std::string());
  if (!path.empty()) {
    fc.ad_keywords = FeatureConfig::parse_keywords(read_file(require_input(path, "ad_keywords_file")));
  }
  resolved["ad_keywords"] = fc.ad_keywords;
  return fc;
}

AttackConfig resolve_attack_config(const Context& ctx) {
  AttackConfig a = attack_config_from_json(ctx.config.value("attack", json::object()));
  if (!ctx.opt.policy.empty()) a.policy = parse_url_policies(ctx.opt.policy);
  if (ctx.opt.collusion) a.collusion = true;
  if (ctx.opt.careless) a.careless = true;
  if (ctx.opt.growth_cap) {
    if (*ctx.opt.growth_cap < 0) throw UsageError("--growth-cap must be non-negative");
    a.growth_cap = *ctx.opt.growth_cap;
  }
  if (ctx.opt.max_iter) a.max_iter = *ctx.opt.max_iter;
  a.seed = resolve_seed(ctx);
  return a;
}

// ---------------------------------------------------------------------------
// On-disk artifacts shared between subcommands

struct GraphEntry {
  std::string page_id;
  std::string file;
  std::size_t nodes = 0;
};

std::vector<GraphEntry> read_graph_index(const fs::path& dir) {
  const auto j = read_json(dir / "index.json");
  std::vector<GraphEntry> out;
  try {
    for (const auto& p : j.at("pages")) {
      out.push_back({p.at("page_id"), p.at("file"), p.at("nodes")});
    }
  } catch (const json::exception& e) {
    throw DataError("malformed graph index: " + std::string(e.what()));
  }
  return out;
}

PageGraph load_graph(const fs::path& dir, const GraphEntry& e) {
  try {
    return graph_from_json(read_json(dir / e.file));
  } catch (const json::exception& ex) {
    throw DataError("malformed graph '" + e.file + "': " + ex.what());
  }
}

std::map<NodeId, int> read_page_labels(const fs::path& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty() || lines[0] != "node_id,label,source") {
    throw DataError("'" + path.string() + "' is not a label file");
  }
  std::map<NodeId, int> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3) throw DataError(path.string() + ": malformed line " + std::to_string(i + 1));
    try {
      out[static_cast<NodeId>(std::stoul(cells[0]))] = cells[1] == "ATS" ? 1 : 0;
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad node id on line " + std::to_string(i + 1));
    }
  }
  return out;
}

/// Feature CSVs joined with label files, one entry per page, sorted by id.
std::vector<PageSamples> load_samples(const fs::path& features_dir, const fs::path& labels_dir,
                                      FeatureSetId set, std::vector<std::string>& names) {
  const auto index = read_json(features_dir / "index.json");
  if (index.value("feature_set", std::string()) != to_string(set)) {
    throw FeatureSetMismatch("features in '" + features_dir.string() + "' were extracted for " +
                             index.value("feature_set", std::string("?")) + ", not " +
                             std::string(to_string(set)));
  }
  names = feature_names(set);
  std::vector<PageSamples> out;
  for (const auto& id : index.at("pages")) {
    const std::string page_id = id.get<std::string>();
    auto m = read_feature_csv(read_file(features_dir / (page_id + ".csv")), set, nullptr);
    const auto labels = read_page_labels(labels_dir / (page_id + ".csv"));
    PageSamples p;
    p.page_id = page_id;
    p.node_ids = m.node_ids;
    p.rows = std::move(m.rows);
    for (auto n : p.node_ids) {
      auto it = labels.find(n);
      if (it == labels.end()) {
        throw DataError("page " + page_id + ": node " + std::to_string(n) + " has no label");
      }
      p.labels.push_back(it->second);
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PageSamples& a, const PageSamples& b) { return a.page_id < b.page_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen(Context& ctx) {
  const auto out = require_out(ctx);
  CorpusSpec spec = corpus_spec_from_json(ctx.config.value("corpus", json::object()));
  if (ctx.opt.n_pages) spec.n_pages = *ctx.opt.n_pages;
  spec.seed = resolve_seed(ctx);
  validate_spec(spec);
  const auto summary = generate_corpus(spec, out, ctx.opt.jobs);
  echo_config(out, {{"command", "gen"}, {"seed", spec.seed}, {"corpus", corpus_spec_to_json(spec)}});
  *ctx.out << "generated " << summary.pages << " pages, " << summary.requests << " requests ("
           << summary.ats_requests << " ATS)\n";
  return kOk;
}

int cmd_build(Context& ctx) {
  const auto corpus = require_input(ctx.opt.corpus, "--corpus");
  const auto out = require_out(ctx);
  const auto gc = resolve_graph_config(ctx);
  const auto pages = read_manifest(corpus);
  std::vector<json> entries(pages.size());
  parallel_for(pages.size(), ctx.opt.jobs, [&](std::size_t i) {
    const auto trace = load_trace((corpus / pages[i].file).string());
    const auto graph = build_graph(trace, gc);
    if (const auto problems = graph.check_invariants(); !problems.empty()) {
      throw InvariantViolation("graph of " + pages[i].page_id + ": " + problems.front());
    }
    const std::string file = pages[i].page_id + ".json";
    write_file_atomic(out / file, graph_to_json(graph).dump() + "\n");
    entries[i] = {{"page_id", pages[i].page_id},
                  {"file", file},
                  {"nodes", graph.node_count()},
                  {"edges", graph.edge_count()}};
    ctx.log->debug("built {} ({} nodes)", pages[i].page_id, graph.node_count());
  });
  std::sort(entries.begin(), entries.end(),
            [](const json& a, const json& b) { return a["page_id"] < b["page_id"]; });
  write_json(out / "index.json", {{"pages", entries}});
  echo_config(out, {{"command", "build"},
                    {"seed", resolve_seed(ctx)},
                    {"corpus", ctx.opt.corpus},
                    {"graph", {{"min_value_len", gc.min_value_len}}}});
  *ctx.out << "built " << entries.size() << " graphs\n";
  return kOk;
}

int cmd_features(Context& ctx) {
  const auto graphs = require_input(ctx.opt.graphs, "--graphs");
  const auto out = require_out(ctx);
  std::optional<fs::path> labels_dir;
  if (!ctx.opt.labels.empty()) labels_dir = require_input(ctx.opt.labels, "--labels");
  const auto set = resolve_feature_set(ctx);
  json resolved = {{"command", "features"},
                   {"seed", resolve_seed(ctx)},
                   {"graphs", ctx.opt.graphs},
                   {"labels", ctx.opt.labels},
                   {"feature_set", to_string(set)}};
  const auto fc = resolve_feature_config(ctx, resolved);
  const auto index = read_graph_index(graphs);
  std::vector<std::size_t> diag_counts(index.size(), 0);
  parallel_for(index.size(), ctx.opt.jobs, [&](std::size_t i) {
    const auto g = load_graph(graphs, index[i]);
    const auto m = extract_matrix(g, set, fc);
    std::vector<int> labels;
    if (labels_dir) {
      const auto lab = read_page_labels(*labels_dir / (index[i].page_id + ".csv"));
      for (auto n : m.node_ids) labels.push_back(lab.count(n) ? lab.at(n) : 0);
    }
    std::ostringstream csv;
    write_feature_csv(csv, m, labels);
    write_file_atomic(out / (index[i].page_id + ".csv"), csv.str());
    diag_counts[i] = m.diagnostics.size();
    for (const auto& d : m.diagnostics) {
      ctx.log->warn("{} node {}: {}", index[i].page_id, d.node, d.detail);
    }
  });
  json ids = json::array();
  for (const auto& e : index) ids.push_back(e.page_id);
  std::size_t diags = 0;
  for (auto d : diag_counts) diags += d;
  write_json(out / "index.json", {{"feature_set", to_string(set)},
                                  {"names", feature_names(set)},
                                  {"pages", ids},
                                  {"diagnostics", diags}});
  echo_config(out, resolved);
  *ctx.out << "extracted " << to_string(set) << " features for " << index.size() << " pages\n";
  return kOk;
}

int cmd_label(Context& ctx) {
  const auto graphs = require_input(ctx.opt.graphs, "--graphs");
  const auto out = require_out(ctx);
  std::string rules_path = ctx.opt.rules;
  if (rules_path.empty()) rules_path = ctx.config.value("rules", std::string());
  const auto rules = parse_rules(read_file(require_input(rules_path, "--rules")));
  std::optional<std::map<std::string, std::map<std::string, Label>>> truth;
  if (!ctx.opt.corpus.empty()) {
    truth = read_ground_truth(require_input(ctx.opt.corpus, "--corpus") / "labels.csv");
  }
  const auto index = read_graph_index(graphs);
  struct PageStats {
    std::size_t ats = 0, nonats = 0, mismatches = 0, diagnostics = 0;
  };
  std::vector<PageStats> stats(index.size());
  parallel_for(index.size(), ctx.opt.jobs, [&](std::size_t i) {
    const auto g = load_graph(graphs, index[i]);
    const auto result = label_graph(g, rules);
    std::ostringstream csv;
    write_labels_csv(csv, result.labels);
    write_file_atomic(out / (index[i].page_id + ".csv"), csv.str());
    auto& s = stats[i];
    s.diagnostics = result.diagnostics.size();
    for (const auto& l : result.labels) {
      (l.label == Label::ATS ? s.ats : s.nonats) += 1;
      if (truth) {
        const auto& page = (*truth)[index[i].page_id];
        auto it = page.find(g.node(l.node).network().request_id);
        if (it == page.end() || it->second != l.label) ++s.mismatches;
      }
    }
  });
  PageStats total;
  for (const auto& s : stats) {
    total.ats += s.ats;
    total.nonats += s.nonats;
    total.mismatches += s.mismatches;
    total.diagnostics += s.diagnostics;
  }
  json summary = {{"pages", index.size()},
                  {"ats", total.ats},
                  {"nonats", total.nonats},
                  {"diagnostics", total.diagnostics}};
  if (truth) summary["ground_truth_mismatches"] = total.mismatches;
  write_json(out / "summary.json", summary);
  echo_config(out, {{"command", "label"},
                    {"seed", resolve_seed(ctx)},
                    {"graphs", ctx.opt.graphs},
                    {"rules", rules_path},
                    {"corpus", ctx.opt.corpus}});
  *ctx.out << "labelled " << total.ats + total.nonats << " requests (" << total.ats << " ATS)";
  if (truth) *ctx.out << ", " << total.mismatches << " differ from ground truth";
  *ctx.out << "\n";
  return kOk;
}

int cmd_train(Context& ctx) {
  const auto features = require_input(ctx.opt.features, "--features");
  const auto labels = require_input(ctx.opt.labels, "--labels");
  const auto out = require_out(ctx);
  const auto set = resolve_training_feature_set(ctx, features);
  const auto params = resolve_hyperparams(ctx);
  const auto seed = resolve_seed(ctx);
  std::vector<std::string> names;
  const auto pages = load_samples(features, labels, set, names);
  Dataset data{names, {}, {}};
  for (const auto& p : pages) {
    data.rows.insert(data.rows.end(), p.rows.begin(), p.rows.end());
    data.labels.insert(data.labels.end(), p.labels.begin(), p.labels.end());
  }
  const auto model = train(data, params, seed, std::string(to_string(set)), ctx.opt.jobs);
  if (const auto problems = model.check_invariants(); !problems.empty()) {
    throw InvariantViolation("trained model: " + problems.front());
  }
  write_file_atomic(out / "model.json", model_to_json(model).dump() + "\n");
  const auto importance = rank_importances(names, {model.feature_importance()});
  write_json(out / "importance.json", importance_to_json(importance));
  write_file_atomic(out / "importance.csv", importance_csv(importance));
  echo_config(out, {{"command", "train"},
                    {"seed", seed},
                    {"features", ctx.opt.features},
                    {"labels", ctx.opt.labels},
                    {"feature_set", to_string(set)},
                    {"model", hyperparams_json(params)}});
  *ctx.out << "trained " << params.n_trees << " trees on " << data.rows.size() << " samples\n";
  return kOk;
}

int cmd_eval(Context& ctx) {
  const auto features = require_input(ctx.opt.features, "--features");
  const auto labels = require_input(ctx.opt.labels, "--labels");
  const auto out = require_out(ctx);
  const auto set = resolve_training_feature_set(ctx, features);
  const auto params = resolve_hyperparams(ctx);
  const auto seed = resolve_seed(ctx);
  const std::size_t k = ctx.opt.folds ? *ctx.opt.folds : ctx.config.value("folds", std::size_t{10});
  if (k < 2) throw UsageError("--folds must be at least 2");
  std::vector<std::string> names;
  const auto pages = load_samples(features, labels, set, names);
  const auto cv = cross_validate(pages, names, std::string(to_string(set)), params, k, seed,
                                 ctx.opt.jobs);
  for (std::size_t f = 0; f < cv.models.size(); ++f) {
    write_file_atomic(out / "models" / ("fold_" + std::to_string(f) + ".json"),
                      model_to_json(cv.models[f]).dump() + "\n");
  }
  write_json(out / "folds.json", {{"folds", cv.folds}});
  write_json(out / "eval_report.json", eval_report_to_json(cv.report));
  write_file_atomic(out / "eval_report.csv", eval_report_csv(cv.report));
  write_json(out / "importance.json", importance_to_json(cv.importance));
  write_file_atomic(out / "importance.csv", importance_csv(cv.importance));
  std::ostringstream preds;
  preds << "page_id,node_id,label,predicted,score,fold\n";
  for (const auto& p : cv.predictions) {
    preds << p.page_id << ',' << p.node << ',' << p.label << ',' << p.prediction.label << ','
          << format_double(p.prediction.score) << ',' << p.fold << '\n';
  }
  write_file_atomic(out / "predictions.csv", preds.str());
  echo_config(out, {{"command", "eval"},
                    {"seed", seed},
                    {"features", ctx.opt.features},
                    {"labels", ctx.opt.labels},
                    {"feature_set", to_string(set)},
                    {"folds", k},
                    {"model", hyperparams_json(params)}});
  const auto& r = cv.report;
  *ctx.out << to_string(set) << ": accuracy " << format_double(r.accuracy.mean) << " +/- "
           << format_double(r.accuracy.std) << ", precision " << format_double(r.precision.mean)
           << ", recall " << format_double(r.recall.mean) << "\n";
  return kOk;
}

/// Which model attacks which page: one model for everything, or the fold
/// models of an `eval` run, each applied to its own held-out pages.
struct ModelAssignment {
  std::vector<TreeEnsembleModel> models;
  std::map<std::string, std::size_t> page_model;  // empty when one model covers all pages
  std::string source;

  const TreeEnsembleModel* for_page(const std::string& page_id) const {
    if (page_model.empty()) return &models.front();
    auto it = page_model.find(page_id);
    return it == page_model.end() ? nullptr : &models[it->second];
  }
};

ModelAssignment load_models(const Context& ctx) {
  ModelAssignment a;
  if (!ctx.opt.model.empty() && !ctx.opt.eval.empty()) {
    throw UsageError("--model and --eval are mutually exclusive");
  }
  if (!ctx.opt.eval.empty()) {
    const auto dir = require_input(ctx.opt.eval, "--eval");
    const auto folds = read_json(dir / "folds.json").at("folds");
    for (std::size_t f = 0; f < folds.size(); ++f) {
      a.models.push_back(model_from_json(
          read_json(dir / "models" / ("fold_" + std::to_string(f) + ".json"))));
      for (const auto& id : folds[f]) a.page_model[id.get<std::string>()] = f;
    }
    a.source = ctx.opt.eval;
  } else {
    const auto path = require_input(ctx.opt.model, "--model");
    a.models.push_back(model_from_json(read_json(path)));
    a.source = ctx.opt.model;
  }
  if (a.models.empty()) throw DataError("no models to attack");
  for (const auto& m : a.models) {
    if (m.feature_set != a.models.front().feature_set) {
      throw FeatureSetMismatch("fold models disagree on the feature set");
    }
  }
  return a;
}

std::vector<std::string> read_page_list(const fs::path& path) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(read_file(path))) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

int run_attack(Context& ctx, bool structure) {
  const auto graphs = require_input(ctx.opt.graphs, "--graphs");
  const auto out = require_out(ctx);
  const auto models = load_models(ctx);
  const auto model_set = parse_feature_set(models.models.front().feature_set);
  if (!model_set) throw DataError("model has unknown feature set '" + models.models.front().feature_set + "'");
  if (!ctx.opt.feature_set.empty() && parse_feature_set(ctx.opt.feature_set) != model_set) {
    throw FeatureSetMismatch("--feature-set " + ctx.opt.feature_set + " does not match the model (" +
                             models.models.front().feature_set + ")");
  }
  const auto config = resolve_attack_config(ctx);
  json resolved = {{"command", structure ? "attack-structure" : "attack-content"},
                   {"seed", config.seed},
                   {"graphs", ctx.opt.graphs},
                   {"models", models.source},
                   {"pages", ctx.opt.pages},
                   {"feature_set", to_string(*model_set)},
                   {"attack", attack_config_to_json(config)},
                   {"graph", {{"min_value_len", resolve_graph_config(ctx).min_value_len}}}};
  const auto fc = resolve_feature_config(ctx, resolved);

  const auto index = read_graph_index(graphs);
  std::map<std::string, const GraphEntry*> by_id;
  for (const auto& e : index) by_id[e.page_id] = &e;

  std::vector<std::string> targets;
  if (!ctx.opt.pages.empty()) {
    targets = read_page_list(require_input(ctx.opt.pages, "--pages"));
  } else if (structure) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& e : index) {
      if (models.for_page(e.page_id)) sizes[e.page_id] = e.nodes;
    }
    targets = select_pages_by_size(sizes, config.bins, config.pages_per_bin, config.max_nodes,
                                   config.seed);
  } else {
    for (const auto& e : index) {
      if (models.for_page(e.page_id)) targets.push_back(e.page_id);
    }
  }
  std::sort(targets.begin(), targets.end());
  for (const auto& t : targets) {
    if (!by_id.count(t)) throw DataError("page '" + t + "' is not in the graph index");
    if (!models.for_page(t)) throw DataError("no model covers page '" + t + "'");
  }

  std::vector<std::optional<AttackReport>> reports(targets.size());
  std::vector<std::string> skip_reason(targets.size());
  parallel_for(targets.size(), ctx.opt.jobs, [&](std::size_t i) {
    const auto& page_id = targets[i];
    const auto graph = load_graph(graphs, *by_id.at(page_id));
    AttackEnv env;
    env.model = models.for_page(page_id);
    env.feature_set = *model_set;
    env.features = fc;
    env.mutation.graph_config = resolve_graph_config(ctx);
    const auto pre = classify_graph(graph, env);
    const auto adversary = select_adversary(graph, pre, fc.suffixes);
    if (!adversary) {
      skip_reason[i] = "no third party predicted ATS";
      return;
    }
    const auto scope = adversary_scope(graph, *adversary, fc.suffixes);
    AttackConfig page_config = config;
    page_config.seed = mix64(config.seed ^ fnv1a(page_id));
    reports[i] = structure ? greedy_attack(graph, env, scope, page_config)
                           : run_content_attack(graph, env, scope, page_config);
    ctx.log->info("{}: adversary {} success {}", page_id, *adversary,
                  reports[i]->metrics.success_rate ? format_double(*reports[i]->metrics.success_rate)
                                                   : std::string("n/a"));
  });

  std::vector<AttackReport> done;
  json skipped = json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!reports[i]) {
      skipped.push_back({{"page_id", targets[i]}, {"reason", skip_reason[i]}});
      continue;
    }
    write_json(out / "reports" / (targets[i] + ".json"), attack_report_to_json(*reports[i]));
    if (structure) {
      write_file_atomic(out / "trajectories" / (targets[i] + ".csv"), trajectory_csv(*reports[i]));
    }
    done.push_back(std::move(*reports[i]));
  }
  const auto summary = summarize_reports(done, config.careless);
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  write_json(out / "summary.json",
             {{"reports", summary.reports},
              {"skipped", skipped},
              {"pooled",
               {{"success_rate", opt(summary.pooled.success_rate)},
                {"collateral_damage", opt(summary.pooled.collateral_damage)},
                {"other_changes", opt(summary.pooled.other_changes)}}},
              {"success", {{"mean", summary.success.mean}, {"std", summary.success.std}}},
              {"collateral", {{"mean", summary.collateral.mean}, {"std", summary.collateral.std}}},
              {"totals",
               {{"ats_adv", summary.totals.ats_adv},
                {"desired", summary.totals.desired},
                {"undesired", summary.totals.undesired},
                {"neutral", summary.totals.neutral},
                {"added", summary.totals.added}}}});
  write_file_atomic(out / "success_collateral.csv", success_collateral_csv(done));
  echo_config(out, resolved);
  *ctx.out << "attacked " << done.size() << " pages (" << skipped.size() << " skipped), pooled success "
           << (summary.pooled.success_rate ? format_double(*summary.pooled.success_rate) : "n/a")
           << "%\n";
  return kOk;
}

int cmd_report(Context& ctx) {
  const auto in = require_input(ctx.opt.in, "--in");
  const auto out = require_out(ctx);
  std::vector<fs::path> files;
  const auto dir = in / "reports";
  if (!fs::is_directory(dir)) throw UsageError("--in: '" + in.string() + "' has no reports/ directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AttackReport> reports;
  bool careless = false;
  for (const auto& f : files) {
    reports.push_back(attack_report_from_json(read_json(f)));
    careless = careless || reports.back().careless;
  }
  const auto summary = summarize_reports(reports, careless);
  write_file_atomic(out / "success_collateral.csv", success_collateral_csv(reports));
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  write_json(out / "report_summary.json",
             {{"reports", summary.reports},
              {"careless", careless},
              {"pooled_success_rate", opt(summary.pooled.success_rate)},
              {"pooled_collateral_damage", opt(summary.pooled.collateral_damage)},
              {"success", {{"mean", summary.success.mean}, {"std", summary.success.std}}},
              {"collateral", {{"mean", summary.collateral.mean}, {"std", summary.collateral.std}}}});
  echo_config(out, {{"command", "report"}, {"seed", resolve_seed(ctx)}, {"in", ctx.opt.in}});
  *ctx.out << "merged " << reports.size() << " attack reports\n";
  return kOk;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("webgraph_lab", sink);
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("WEBGRAPH_LAB_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return log;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.log = make_logger(err);
  auto& o = ctx.opt;

  CLI::App app{"Page-graph tracker detection laboratory", "webgraph_lab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "JSON config file; flags override its values");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace corpus");
  gen->add_option("--n-pages", o.n_pages, "Number of pages");
  auto* build = app.add_subcommand("build", "Build page graphs from traces");
  build->add_option("--corpus", o.corpus, "Corpus directory");
  auto* features = app.add_subcommand("features", "Extract per-page feature CSVs");
  features->add_option("--graphs", o.graphs, "Graph directory");
  features->add_option("--labels", o.labels, "Label directory (fills the label column)");
  features->add_option("--feature-set", o.feature_set, "Feature set id");
  auto* label = app.add_subcommand("label", "Label network nodes with filter rules");
  label->add_option("--graphs", o.graphs, "Graph directory");
  label->add_option("--rules", o.rules, "Filter rule file");
  label->add_option("--corpus", o.corpus, "Corpus directory to compare against ground truth");
  auto* trainc = app.add_subcommand("train", "Train a tree ensemble on all pages");
  auto* evalc = app.add_subcommand("eval", "Page-disjoint k-fold cross-validation");
  for (auto* sc : {trainc, evalc}) {
    sc->add_option("--features", o.features, "Feature directory");
    sc->add_option("--labels", o.labels, "Label directory");
    sc->add_option("--feature-set", o.feature_set, "Feature set id");
  }
  evalc->add_option("--folds", o.folds, "Number of folds");
  auto* content = app.add_subcommand("attack-content", "URL content-mutation attack");
  auto* structure = app.add_subcommand("attack-structure", "Greedy graph-mutation attack");
  for (auto* sc : {content, structure}) {
    sc->add_option("--graphs", o.graphs, "Graph directory");
    sc->add_option("--model", o.model, "Model file");
    sc->add_option("--eval", o.eval, "Eval output directory (fold models attack held-out pages)");
    sc->add_option("--pages", o.pages, "File listing the page ids to attack");
    sc->add_option("--feature-set", o.feature_set, "Expected feature set of the model");
    sc->add_flag("--careless", o.careless, "Adversary ignores collateral damage to other parties");
  }
  content->add_option("--policy", o.policy, "Comma-separated URL mutation policies");
  content->add_flag("--collusion", o.collusion, "Adversary colludes with the first party");
  structure->add_flag("--collusion", o.collusion, "Adversary may attach resources to any node");
  structure->add_option("--growth-cap", o.growth_cap, "Maximum relative node growth");
  structure->add_option("--max-iter", o.max_iter, "Maximum greedy iterations");
  auto* report = app.add_subcommand("report", "Merge attack reports into plot-ready CSV");
  report->add_option("--in", o.in, "Attack output directory");

  std::vector<std::string> argv_store{"webgraph_lab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (!o.config.empty()) {
      ctx.config = read_json(require_input(o.config, "--config"));
      if (!ctx.config.is_object()) throw DataError("--config must hold a JSON object");
    }
    if (!ctx.opt.jobs) ctx.opt.jobs = 1;
    if (gen->parsed()) return cmd_gen(ctx);
    if (build->parsed()) return cmd_build(ctx);
    if (features->parsed()) return cmd_features(ctx);
    if (label->parsed()) return cmd_label(ctx);
    if (trainc->parsed()) return cmd_train(ctx);
    if (evalc->parsed()) return cmd_eval(ctx);
    if (content->parsed()) return run_attack(ctx, false);
    if (structure->parsed()) return run_attack(ctx, true);
    if (report->parsed()) return cmd_report(ctx);
    err << "error: no subcommand\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kInvariant;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInvariant;
  }
}

}  // namespace webgraph::cli
