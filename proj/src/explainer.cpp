#include "flakelens/explainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "flakelens/format.hpp"

namespace flakelens {

namespace {

// One feature on the current root-to-node path with the fraction of
// "zero" (feature absent) and "one" (feature fixed to x) paths flowing
// through it, plus the permutation weight of path subsets.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[static_cast<std::size_t>(depth)] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    auto& cur = path[static_cast<std::size_t>(i)];
    path[static_cast<std::size_t>(i + 1)].weight += one_fraction * cur.weight * (i + 1) / (depth + 1.0);
    cur.weight = zero_fraction * cur.weight * (depth - i) / (depth + 1.0);
  }
}

void unwind_path(Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next = path[static_cast<std::size_t>(depth)].weight;
  for (int i = depth - 1; i >= 0; --i) {
    auto& cur = path[static_cast<std::size_t>(i)];
    if (one != 0.0) {
      const double tmp = cur.weight;
      cur.weight = next * (depth + 1.0) / ((i + 1.0) * one);
      next = tmp - cur.weight * zero * (depth - i) / (depth + 1.0);
    } else {
      cur.weight = cur.weight * (depth + 1.0) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    auto& dst = path[static_cast<std::size_t>(i)];
    const auto& src = path[static_cast<std::size_t>(i + 1)];
    dst.feature = src.feature;
    dst.zero_fraction = src.zero_fraction;
    dst.one_fraction = src.one_fraction;
  }
}

// Total weight of the path with element `index` removed, without mutating it.
double unwound_sum(const Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next = path[static_cast<std::size_t>(depth)].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    const auto& cur = path[static_cast<std::size_t>(i)];
    if (one != 0.0) {
      const double tmp = next * (depth + 1.0) / ((i + 1.0) * one);
      total += tmp;
      next = cur.weight - tmp * zero * (depth - i) / (depth + 1.0);
    } else {
      total += cur.weight / zero / ((depth - i) / (depth + 1.0));
    }
  }
  return total;
}

void recurse(const Tree& tree, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& phi, int node_id,
             Path path, int depth, double zero_fraction, double one_fraction, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  extend_path(path, depth, zero_fraction, one_fraction, feature);

  const auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const auto& el = path[static_cast<std::size_t>(i)];
      const double w = unwound_sum(path, depth, i);
      phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const bool go_left = x[node.feature] <= node.threshold;
  const int hot = go_left ? node.left : node.right;
  const int cold = go_left ? node.right : node.left;
  const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / node.cover;
  const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / node.cover;

  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  // A feature seen earlier on the path is merged rather than added twice.
  int k = 1;
  for (; k <= depth; ++k) {
    if (path[static_cast<std::size_t>(k)].feature == node.feature) break;
  }
  if (k <= depth) {
    incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
    incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }
  path.resize(static_cast<std::size_t>(depth) + 1);
  recurse(tree, x, phi, hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, node.feature);
  recurse(tree, x, phi, cold, path, depth + 1, cold_zero * incoming_zero, 0.0, node.feature);
}

void require_cover(const TreeEnsembleModel& model) {
  for (const auto& t : model.trees) {
    if (!t.has_cover()) throw ModelMetadataError("tree nodes lack positive cover; cannot compute SHAP values");
  }
}

double base_value(const TreeEnsembleModel& model) {
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.expected_value();
  return model.initial_score + model.learning_rate * sum;
}

double conditional_expectation(const Tree& tree, int node_id, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const std::vector<bool>& mask) {
  const auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (node.is_leaf()) return node.value;
  if (mask[static_cast<std::size_t>(node.feature)]) {
    return conditional_expectation(tree, x[node.feature] <= node.threshold ? node.left : node.right, x, mask);
  }
  const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
  const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
  return (l.cover * conditional_expectation(tree, node.left, x, mask) +
          r.cover * conditional_expectation(tree, node.right, x, mask)) /
         node.cover;
}

}  // namespace

Eigen::VectorXd tree_shap_row(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_cover(model);
  if (x.size() != model.n_features) throw SchemaMismatchError("input length does not match the model");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(model.n_features);
  for (const auto& tree : model.trees) {
    Eigen::VectorXd tree_phi = Eigen::VectorXd::Zero(model.n_features);
    recurse(tree, x, tree_phi, 0, Path(1), 0, 1.0, 1.0, -1);
    phi += model.learning_rate * tree_phi;
  }
  return phi;
}

ShapExplanation tree_shap(const TreeEnsembleModel& model, const Eigen::MatrixXd& X) {
  require_cover(model);
  ShapExplanation e;
  e.base_value = base_value(model);
  e.schema = model.schema;
  e.values.resize(X.rows(), model.n_features);
  for (Eigen::Index r = 0; r < X.rows(); ++r) e.values.row(r) = tree_shap_row(model, X.row(r).transpose()).transpose();
  return e;
}

double coalition_value(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const std::vector<bool>& mask) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += conditional_expectation(tree, 0, x, mask);
  return model.initial_score + model.learning_rate * sum;
}

Eigen::VectorXd brute_force_shapley(const TreeEnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index m = model.n_features;
  if (m > kMaxBruteForceFeatures) {
    throw ContractViolation("brute-force Shapley limited to " + std::to_string(kMaxBruteForceFeatures) + " features");
  }
  if (x.size() != m) throw SchemaMismatchError("input length does not match the model");
  require_cover(model);

  const std::size_t subsets = std::size_t{1} << m;
  std::vector<double> value(subsets);
  std::vector<bool> mask(static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < subsets; ++s) {
    for (Eigen::Index j = 0; j < m; ++j) mask[static_cast<std::size_t>(j)] = (s >> j) & 1U;
    value[s] = coalition_value(model, x, mask);
  }

  // kernel[k] = k! (m-k-1)! / m!
  std::vector<double> kernel(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    double w = 1.0 / static_cast<double>(m);
    // 1/m * 1/C(m-1, k)
    for (Eigen::Index i = 1; i <= k; ++i) w *= static_cast<double>(i) / static_cast<double>(m - 1 - k + i);
    kernel[static_cast<std::size_t>(k)] = w;
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(m);
  for (std::size_t s = 0; s < subsets; ++s) {
    const int size = std::popcount(s);
    for (Eigen::Index i = 0; i < m; ++i) {
      if ((s >> i) & 1U) continue;
      phi[i] += kernel[static_cast<std::size_t>(size)] * (value[s | (std::size_t{1} << i)] - value[s]);
    }
  }
  return phi;
}

FeatureRanking rank_features(const ShapExplanation& explanation) {
  const auto names = explanation.schema.names();
  const auto cols = explanation.values.cols();
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != cols) {
    throw SchemaMismatchError("attribution matrix and schema disagree");
  }
  FeatureRanking ranking;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double mean_abs = explanation.values.rows() == 0 ? 0.0 : explanation.values.col(c).cwiseAbs().mean();
    ranking.emplace_back(names.empty() ? "f" + std::to_string(c) : names[static_cast<std::size_t>(c)], mean_abs);
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranking;
}

FeatureSchema select_top_k(const FeatureRanking& ranking, const FeatureSchema& schema, std::size_t k) {
  if (k == 0 || k > ranking.size()) throw ContractViolation("k must lie in [1, feature count]");
  std::vector<std::string> keep;
  for (std::size_t i = 0; i < k; ++i) keep.push_back(ranking[i].first);
  return schema.subset(keep);
}

Eigen::VectorXd percentiles(const Eigen::VectorXd& column) {
  const Eigen::Index n = column.size();
  Eigen::VectorXd out(n);
  if (n == 1) {
    out[0] = 0.5;
    return out;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return column[a] < column[b]; });
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && column[order[j + 1]] == column[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;  // 0-based
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = mid_rank / static_cast<double>(n - 1);
    i = j + 1;
  }
  return out;
}

namespace {

std::vector<Eigen::Index> top_columns(const ShapExplanation& e, const FeatureRanking& ranking, std::size_t top_n) {
  if (top_n > ranking.size()) throw ContractViolation("top_n exceeds the feature count");
  const auto names = e.schema.names();
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < top_n; ++i) {
    if (names.empty()) {
      cols.push_back(static_cast<Eigen::Index>(std::stoul(ranking[i].first.substr(1))));
    } else {
      cols.push_back(static_cast<Eigen::Index>(*e.schema.index_of(ranking[i].first)));
    }
  }
  return cols;
}

}  // namespace

void export_beeswarm(const ShapExplanation& explanation, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& unit_ids, std::size_t top_n, std::ostream& out) {
  if (X.rows() != explanation.values.rows() || X.cols() != explanation.values.cols() ||
      static_cast<Eigen::Index>(unit_ids.size()) != X.rows()) {
    throw SchemaMismatchError("feature matrix, unit ids and attributions disagree in shape");
  }
  const auto ranking = rank_features(explanation);
  const auto cols = top_columns(explanation, ranking, top_n);
  out << "feature,unit_id,shap_value,feature_value,feature_percentile\n";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const Eigen::Index c = cols[i];
    const Eigen::VectorXd pct = percentiles(X.col(c));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      out << csv_escape(ranking[i].first) << ',' << csv_escape(unit_ids[static_cast<std::size_t>(r)]) << ','
          << format_double(explanation.values(r, c)) << ',' << format_double(X(r, c)) << ','
          << format_double(pct[r]) << '\n';
    }
  }
  if (!out) throw IoError("failed to write beeswarm CSV");
}

std::string beeswarm_svg(const ShapExplanation& explanation, const Eigen::MatrixXd& X, std::size_t top_n) {
  const auto ranking = rank_features(explanation);
  const auto cols = top_columns(explanation, ranking, top_n);
  constexpr double row_height = 40.0, label_width = 220.0, plot_width = 480.0, margin = 20.0;
  const double height = margin * 2 + row_height * static_cast<double>(cols.size()) + 30.0;
  const double width = label_width + plot_width + margin * 2;

  double lo = 0.0, hi = 0.0;
  for (auto c : cols) {
    if (X.rows() == 0) break;
    lo = std::min(lo, explanation.values.col(c).minCoeff());
    hi = std::max(hi, explanation.values.col(c).maxCoeff());
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto x_of = [&](double v) { return label_width + margin + (v - lo) / (hi - lo) * plot_width; };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                width, height);
  svg += buf;
  std::snprintf(buf, sizeof(buf), "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#999\"/>\n", x_of(0.0),
                margin, x_of(0.0), height - 30.0);
  svg += buf;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const Eigen::Index c = cols[i];
    const double cy = margin + row_height * (static_cast<double>(i) + 0.5);
    std::string label = ranking[i].first;
    for (auto [from, to] : {std::pair<char, const char*>{'&', "&amp;"}, {'<', "&lt;"}, {'>', "&gt;"}}) {
      std::string escaped;
      for (char ch : label) escaped += ch == from ? std::string(to) : std::string(1, ch);
      label = escaped;
    }
    std::snprintf(buf, sizeof(buf), "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">", label_width, cy + 4.0);
    svg += buf + label + "</text>\n";

    const Eigen::VectorXd pct = percentiles(X.col(c));
    const Eigen::VectorXd shap_rank = percentiles(explanation.values.col(c));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      // Jitter from the SHAP value's rank keeps the output byte-stable.
      const auto slot = static_cast<int>(std::lround(shap_rank[r] * 1000.0)) % 9;
      const double dy = (slot - 4) * 3.0;
      const int red = static_cast<int>(std::lround(30 + 225 * pct[r]));
      const int blue = static_cast<int>(std::lround(255 - 225 * pct[r]));
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"rgb(%d,40,%d)\" opacity=\"0.8\"/>\n",
                    x_of(explanation.values(r, c)), cy + dy, red, blue);
      svg += buf;
    }
  }
  std::snprintf(buf, sizeof(buf), "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">SHAP value (raw score)</text>\n",
                label_width + margin + plot_width / 2.0, height - 8.0);
  svg += buf;
  svg += "</svg>\n";
  return svg;
}

std::string ranking_csv(const FeatureRanking& ranking) {
  std::string out = "feature,mean_abs_shap\n";
  for (const auto& [name, value] : ranking) out += csv_escape(name) + "," + format_double(value) + "\n";
  return out;
}

}  // namespace flakelens
