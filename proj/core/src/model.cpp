#include "webgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "webgraph/errors.hpp"
#include "webgraph/parallel.hpp"
#include "webgraph/rng.hpp"

namespace webgraph {

using nlohmann::json;

namespace {

constexpr double kGainEps = 1e-12;

double entropy_of(double p) {
  if (p <= 0 || p >= 1) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

/// Builds one tree from column-major data and per-sample bootstrap counts.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, const std::vector<int>& labels,
              const std::vector<double>& counts, const Hyperparams& params,
              std::size_t features_per_split, Rng& rng)
      : columns_(columns),
        labels_(labels),
        counts_(counts),
        params_(params),
        k_(features_per_split),
        rng_(rng) {}

  Tree build() {
    std::vector<std::uint32_t> idx;
    for (std::uint32_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] > 0) idx.push_back(i);
    }
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
  };

  int grow(const std::vector<std::uint32_t>& idx, std::size_t depth) {
    double w = 0, pos = 0;
    for (auto i : idx) {
      w += counts_[i];
      pos += counts_[i] * labels_[i];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.p_ats = pos / w;
    node.weight = w;
    tree_.nodes.push_back(node);

    if (depth >= params_.max_depth || w < static_cast<double>(params_.min_samples_split) ||
        pos == 0 || pos == w) {
      return id;
    }
    const Split best = find_split(idx, w, pos);
    if (best.feature < 0 || best.gain <= kGainEps) return id;

    std::vector<std::uint32_t> left, right;
    const auto& col = columns_[static_cast<std::size_t>(best.feature)];
    for (auto i : idx) (col[i] <= best.threshold ? left : right).push_back(i);

    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  Split find_split(const std::vector<std::uint32_t>& idx, double w, double pos) {
    const double parent_h = entropy_of(pos / w);
    std::vector<std::size_t> order(columns_.size());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);

    Split best;
    std::size_t evaluated = 0;
    std::vector<std::pair<double, std::uint32_t>> sorted(idx.size());
    for (auto f : order) {
      if (evaluated == k_) break;
      const auto& col = columns_[f];
      const auto [mn, mx] = std::minmax_element(idx.begin(), idx.end(), [&](auto a, auto b) {
        return col[a] < col[b];
      });
      if (col[*mn] == col[*mx]) continue;
      ++evaluated;

      for (std::size_t j = 0; j < idx.size(); ++j) sorted[j] = {col[idx[j]], idx[j]};
      std::sort(sorted.begin(), sorted.end());
      double wl = 0, pl = 0;
      for (std::size_t j = 0; j + 1 < sorted.size(); ++j) {
        const auto i = sorted[j].second;
        wl += counts_[i];
        pl += counts_[i] * labels_[i];
        const double a = sorted[j].first, b = sorted[j + 1].first;
        if (a == b) continue;
        const double wr = w - wl, pr = pos - pl;
        const double gain =
            parent_h - (wl / w) * entropy_of(pl / wl) - (wr / w) * entropy_of(pr / wr);
        double threshold = a + (b - a) / 2;
        if (!(threshold < b)) threshold = a;
        const bool better =
            gain > best.gain + kGainEps ||
            (std::abs(gain - best.gain) <= kGainEps && best.feature >= 0 &&
             (static_cast<int>(f) < best.feature ||
              (static_cast<int>(f) == best.feature && threshold < best.threshold)));
        if (better || best.feature < 0) {
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  const std::vector<int>& labels_;
  const std::vector<double>& counts_;
  const Hyperparams& params_;
  std::size_t k_;
  Rng& rng_;
  Tree tree_;
};

const TreeNode& leaf_for(const Tree& t, const std::vector<double>& row) {
  const TreeNode* n = &t.nodes[0];
  while (!n->is_leaf()) {
    n = &t.nodes[static_cast<std::size_t>(row[static_cast<std::size_t>(n->feature)] <= n->threshold
                                              ? n->left
                                              : n->right)];
  }
  return *n;
}

}  // namespace

double binary_entropy(double positive, double total) {
  return total <= 0 ? 0.0 : entropy_of(positive / total);
}

double info_gain(const std::vector<double>& values, const std::vector<int>& labels,
                 double threshold) {
  if (values.size() != labels.size() || values.empty()) {
    throw DataError("info_gain needs equally sized, non-empty inputs");
  }
  double n = 0, pos = 0, nl = 0, pl = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    n += 1;
    pos += labels[i];
    if (values[i] <= threshold) {
      nl += 1;
      pl += labels[i];
    }
  }
  const double nr = n - nl, pr = pos - pl;
  return binary_entropy(pos, n) - (nl / n) * binary_entropy(pl, nl) -
         (nr / n) * binary_entropy(pr, nr);
}

std::size_t Tree::depth() const {
  std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

// ---------------------------------------------------------------------------
// Model

Prediction TreeEnsembleModel::predict(const std::vector<double>& row) const {
  if (row.size() != feature_names.size()) {
    throw FeatureSetMismatch("row has " + std::to_string(row.size()) + " features, model expects " +
                             std::to_string(feature_names.size()));
  }
  double sum = 0;
  for (const auto& t : trees) sum += leaf_for(t, row).p_ats;
  Prediction p;
  p.score = trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
  p.label = p.score >= 0.5 ? 1 : 0;
  return p;
}

std::vector<Prediction> TreeEnsembleModel::predict_all(
    const std::vector<std::vector<double>>& rows) const {
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict(r));
  return out;
}

Explanation TreeEnsembleModel::explain(const std::vector<double>& row) const {
  if (row.size() != feature_names.size()) {
    throw FeatureSetMismatch("row has " + std::to_string(row.size()) + " features, model expects " +
                             std::to_string(feature_names.size()));
  }
  Explanation e;
  e.contributions.assign(row.size(), 0.0);
  if (trees.empty()) return e;
  const double n = static_cast<double>(trees.size());
  double leaves = 0;
  for (const auto& t : trees) {
    const TreeNode* node = &t.nodes[0];
    e.bias += node->p_ats;
    while (!node->is_leaf()) {
      const auto f = static_cast<std::size_t>(node->feature);
      const TreeNode* child =
          &t.nodes[static_cast<std::size_t>(row[f] <= node->threshold ? node->left : node->right)];
      e.contributions[f] += child->p_ats - node->p_ats;
      node = child;
    }
    leaves += node->p_ats;
  }
  e.bias /= n;
  for (auto& c : e.contributions) c /= n;
  e.score = leaves / n;
  return e;
}

std::vector<double> TreeEnsembleModel::feature_importance() const {
  std::vector<double> total(feature_names.size(), 0.0);
  std::size_t split_trees = 0;
  for (const auto& t : trees) {
    std::vector<double> imp(feature_names.size(), 0.0);
    double sum = 0;
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) continue;
      const auto& l = t.nodes[static_cast<std::size_t>(n.left)];
      const auto& r = t.nodes[static_cast<std::size_t>(n.right)];
      const double dec = n.weight * entropy_of(n.p_ats) - l.weight * entropy_of(l.p_ats) -
                         r.weight * entropy_of(r.p_ats);
      imp[static_cast<std::size_t>(n.feature)] += dec;
      sum += dec;
    }
    if (sum <= 0) continue;
    ++split_trees;
    for (std::size_t f = 0; f < imp.size(); ++f) total[f] += imp[f] / sum;
  }
  if (split_trees == 0) return total;
  for (auto& v : total) v = 100.0 * v / static_cast<double>(split_trees);
  return total;
}

std::vector<std::string> TreeEnsembleModel::check_invariants() const {
  std::vector<std::string> problems;
  for (std::size_t ti = 0; ti < trees.size(); ++ti) {
    const auto& t = trees[ti];
    const auto tag = "tree " + std::to_string(ti) + ": ";
    if (t.nodes.empty()) {
      problems.push_back(tag + "empty");
      continue;
    }
    for (const auto& n : t.nodes) {
      if (!(n.p_ats >= 0 && n.p_ats <= 1)) problems.push_back(tag + "probability out of range");
      if (n.is_leaf()) continue;
      if (static_cast<std::size_t>(n.feature) >= feature_names.size()) {
        problems.push_back(tag + "feature index out of range");
      }
      const auto sz = static_cast<int>(t.nodes.size());
      if (n.left <= 0 || n.left >= sz || n.right <= 0 || n.right >= sz) {
        problems.push_back(tag + "bad child index");
      }
    }
    if (problems.empty() && t.depth() > hyperparams.max_depth) {
      problems.push_back(tag + "deeper than max_depth");
    }
  }
  return problems;
}

TreeEnsembleModel train(const Dataset& data, const Hyperparams& params, std::uint64_t seed,
                        const std::string& feature_set, std::size_t jobs) {
  const std::size_t n = data.rows.size();
  if (data.labels.size() != n) throw DataError("label count does not match row count");
  std::size_t pos = 0;
  for (auto l : data.labels) pos += l == 1;
  if (n < 2 || pos == 0 || pos == n) throw SingleClassTraining();
  if (params.n_trees == 0) throw DataError("n_trees must be positive");

  const std::size_t f = data.n_features();
  std::vector<std::vector<double>> columns(f, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (data.rows[i].size() != f) throw FeatureSetMismatch("ragged training matrix");
    for (std::size_t j = 0; j < f; ++j) columns[j][i] = data.rows[i][j];
  }
  const std::size_t k =
      params.features_per_split
          ? std::min(params.features_per_split, f)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(f))));

  TreeEnsembleModel model;
  model.feature_set = feature_set;
  model.feature_names = data.feature_names;
  model.hyperparams = params;
  model.seed = seed;
  model.class_counts[0] = n - pos;
  model.class_counts[1] = pos;
  model.trees.resize(params.n_trees);

  parallel_for(params.n_trees, jobs, [&](std::size_t t) {
    Rng rng = Rng::derive(seed, {t});
    std::vector<double> counts(n, params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) counts[rng.uniform(n)] += 1;
    }
    model.trees[t] = TreeBuilder(columns, data.labels, counts, params, k, rng).build();
  });
  return model;
}

Prediction predict(const TreeEnsembleModel& model, const std::vector<double>& row) {
  return model.predict(row);
}

Explanation explain_prediction(const TreeEnsembleModel& model, const std::vector<double>& row) {
  return model.explain(row);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json node_to_json(const Tree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  json j = {{"proba", {1.0 - n.p_ats, n.p_ats}}, {"samples", n.weight}};
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(t, n.left);
    j["right"] = node_to_json(t, n.right);
  }
  return j;
}

int node_from_json(const json& j, Tree& t) {
  const int id = static_cast<int>(t.nodes.size());
  TreeNode n;
  n.p_ats = j.at("proba").at(1).get<double>();
  n.weight = j.at("samples").get<double>();
  t.nodes.push_back(n);
  if (j.contains("feature")) {
    t.nodes[static_cast<std::size_t>(id)].feature = j.at("feature").get<int>();
    t.nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), t);
    const int r = node_from_json(j.at("right"), t);
    t.nodes[static_cast<std::size_t>(id)].left = l;
    t.nodes[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

}  // namespace

json model_to_json(const TreeEnsembleModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(node_to_json(t, 0));
  return {{"feature_set", m.feature_set},
          {"feature_names", m.feature_names},
          {"hyperparams",
           {{"n_trees", m.hyperparams.n_trees},
            {"max_depth", m.hyperparams.max_depth},
            {"min_samples_split", m.hyperparams.min_samples_split},
            {"features_per_split", m.hyperparams.features_per_split},
            {"bootstrap", m.hyperparams.bootstrap}}},
          {"seed", m.seed},
          {"class_counts", {m.class_counts[0], m.class_counts[1]}},
          {"trees", std::move(trees)}};
}

TreeEnsembleModel model_from_json(const json& j) {
  try {
    TreeEnsembleModel m;
    m.feature_set = j.at("feature_set").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& h = j.at("hyperparams");
    m.hyperparams.n_trees = h.at("n_trees").get<std::size_t>();
    m.hyperparams.max_depth = h.at("max_depth").get<std::size_t>();
    m.hyperparams.min_samples_split = h.at("min_samples_split").get<std::size_t>();
    m.hyperparams.features_per_split = h.at("features_per_split").get<std::size_t>();
    m.hyperparams.bootstrap = h.at("bootstrap").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.class_counts[0] = j.at("class_counts").at(0).get<std::size_t>();
    m.class_counts[1] = j.at("class_counts").at(1).get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      node_from_json(jt, t);
      m.trees.push_back(std::move(t));
    }
    if (auto problems = m.check_invariants(); !problems.empty()) {
      throw DataError("invalid model: " + problems.front());
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> page_ids, std::size_t k,
                                                  std::uint64_t seed) {
  if (k == 0 || k > page_ids.size()) throw TooFewPages(page_ids.size(), k);
  std::sort(page_ids.begin(), page_ids.end());
  Rng rng(seed);
  rng.shuffle(page_ids);
  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = page_ids.size() / k, extra = page_ids.size() % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(page_ids.begin() + static_cast<std::ptrdiff_t>(at),
                    page_ids.begin() + static_cast<std::ptrdiff_t>(at + size));
    std::sort(folds[f].begin(), folds[f].end());
    at += size;
  }
  return folds;
}

double Confusion::accuracy() const {
  return total() == 0 ? 0.0 : 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
}
double Confusion::precision() const {
  return tp + fp == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
}
double Confusion::recall() const {
  return tp + fn == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
}
Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return r;
}

EvalReport summarize_folds(std::vector<FoldResult> folds) {
  EvalReport r;
  std::vector<double> acc, prec, rec;
  for (const auto& f : folds) {
    r.total += f.confusion;
    acc.push_back(f.confusion.accuracy());
    prec.push_back(f.confusion.precision());
    rec.push_back(f.confusion.recall());
  }
  r.accuracy = mean_std(acc);
  r.precision = mean_std(prec);
  r.recall = mean_std(rec);
  r.folds = std::move(folds);
  return r;
}

ImportanceReport rank_importances(const std::vector<std::string>& feature_names,
                                  const std::vector<std::vector<double>>& per_fold) {
  ImportanceReport report;
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    std::vector<double> values;
    for (const auto& fold : per_fold) values.push_back(fold.at(f));
    report.push_back({feature_names[f], feature_category(feature_names[f]), mean_std(values)});
  }
  std::stable_sort(report.begin(), report.end(), [](const auto& a, const auto& b) {
    return a.gain.mean > b.gain.mean;
  });
  return report;
}

CrossValidation cross_validate(const std::vector<PageSamples>& pages,
                               const std::vector<std::string>& feature_names,
                               const std::string& feature_set, const Hyperparams& params,
                               std::size_t k, std::uint64_t seed, std::size_t jobs) {
  std::vector<std::string> ids;
  std::map<std::string, const PageSamples*> by_id;
  for (const auto& p : pages) {
    if (!by_id.emplace(p.page_id, &p).second) throw DataError("duplicate page id " + p.page_id);
    ids.push_back(p.page_id);
  }
  CrossValidation cv;
  cv.folds = kfold_split(ids, k, seed);

  std::vector<FoldResult> results;
  for (std::size_t f = 0; f < k; ++f) {
    const std::set<std::string> test(cv.folds[f].begin(), cv.folds[f].end());
    Dataset train_set{feature_names, {}, {}};
    for (const auto& p : pages) {
      if (test.count(p.page_id)) continue;
      train_set.rows.insert(train_set.rows.end(), p.rows.begin(), p.rows.end());
      train_set.labels.insert(train_set.labels.end(), p.labels.begin(), p.labels.end());
    }
    auto model = train(train_set, params, mix64(seed ^ mix64(f + 1)), feature_set, jobs);

    FoldResult fr;
    fr.test_pages = cv.folds[f];
    for (const auto& id : cv.folds[f]) {
      const auto& p = *by_id.at(id);
      for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto pred = model.predict(p.rows[i]);
        const int truth = p.labels[i];
        if (pred.label == 1) {
          (truth == 1 ? fr.confusion.tp : fr.confusion.fp) += 1;
        } else {
          (truth == 1 ? fr.confusion.fn : fr.confusion.tn) += 1;
        }
        cv.predictions.push_back({id, p.node_ids.empty() ? NodeId(i) : p.node_ids[i], truth, pred, f});
      }
    }
    results.push_back(std::move(fr));
    cv.fold_importances.push_back(model.feature_importance());
    cv.models.push_back(std::move(model));
  }
  cv.report = summarize_folds(std::move(results));
  cv.importance = rank_importances(feature_names, cv.fold_importances);
  return cv;
}

namespace {

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"tn", c.tn},
          {"fn", c.fn},
          {"accuracy", c.accuracy()},
          {"precision", c.precision()},
          {"recall", c.recall()}};
}

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

json eval_report_to_json(const EvalReport& r) {
  json folds = json::array();
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    auto j = confusion_json(r.folds[i].confusion);
    j["fold"] = i;
    j["test_pages"] = r.folds[i].test_pages;
    folds.push_back(std::move(j));
  }
  return {{"folds", std::move(folds)},
          {"total", confusion_json(r.total)},
          {"accuracy", mean_std_json(r.accuracy)},
          {"precision", mean_std_json(r.precision)},
          {"recall", mean_std_json(r.recall)}};
}

json importance_to_json(const ImportanceReport& r) {
  json out = json::array();
  for (const auto& e : r) {
    out.push_back({{"feature", e.feature},
                   {"category", to_string(e.category)},
                   {"gain", mean_std_json(e.gain)}});
  }
  return out;
}

std::string eval_report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "fold,accuracy,precision,recall,tp,fp,tn,fn\n";
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    const auto& c = r.folds[i].confusion;
    out << i << ',' << format_double(c.accuracy()) << ',' << format_double(c.precision()) << ','
        << format_double(c.recall()) << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn
        << '\n';
  }
  out << "mean," << format_double(r.accuracy.mean) << ',' << format_double(r.precision.mean) << ','
      << format_double(r.recall.mean) << ",,,,\n";
  out << "std," << format_double(r.accuracy.std) << ',' << format_double(r.precision.std) << ','
      << format_double(r.recall.std) << ",,,,\n";
  return out.str();
}

std::string importance_csv(const ImportanceReport& r) {
  std::ostringstream out;
  out << "rank,feature,category,gain_mean,gain_std\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << i + 1 << ',' << r[i].feature << ',' << to_string(r[i].category) << ','
        << format_double(r[i].gain.mean) << ',' << format_double(r[i].gain.std) << '\n';
  }
  return out.str();
}

}  // namespace webgraph
