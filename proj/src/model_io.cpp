#include "flakelens/model_io.hpp"

#include <json.hpp>

#include "flakelens/feature_io.hpp"

namespace flakelens {

std::string model_to_json(const TreeEnsembleModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = "flakelens-model";
  doc["version"] = kModelFormatVersion;
  doc["kind"] = std::string(model_kind_name(model.kind));
  doc["initial_score"] = model.initial_score;
  doc["learning_rate"] = model.learning_rate;
  doc["n_features"] = model.n_features;
  doc["schema"] = schema_to_json(model.schema);
  auto trees = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
      nlohmann::ordered_json node;
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
      node["value"] = n.value;
      node["cover"] = n.cover;
      nodes.push_back(std::move(node));
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump(1) + "\n";
}

TreeEnsembleModel model_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "flakelens-model") throw ValidationError("not a model document");
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw ValidationError("unsupported model version " + doc.at("version").dump());
    }
    TreeEnsembleModel model;
    model.kind = model_kind_from_name(doc.at("kind").get<std::string>());
    model.initial_score = doc.at("initial_score").get<double>();
    model.learning_rate = doc.at("learning_rate").get<double>();
    model.n_features = doc.at("n_features").get<Eigen::Index>();
    model.schema = schema_from_json(doc.at("schema"));
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      const auto& nodes = t.at("nodes");
      for (const auto& n : nodes) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = n.at("value").get<double>();
        if (auto c = n.find("cover"); c != n.end() && c->is_number()) node.cover = c->get<double>();
        const auto count = static_cast<int>(nodes.size());
        if (!node.is_leaf() && (node.left >= count || node.right >= count || node.right < 0 || node.feature < 0 ||
                                node.feature >= model.n_features)) {
          throw ValidationError("tree node references out of range");
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw ValidationError("empty tree");
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace flakelens
