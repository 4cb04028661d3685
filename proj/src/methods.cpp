#include "specid/methods.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "specid/rng.hpp"

namespace specid {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::one_nn, Method::centroid,   Method::rf,       Method::svm_ovo, Method::svm_ova,
      Method::multiclass, Method::treeloss, Method::structured, Method::coc,  Method::dsvm,
  };
  return methods;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::one_nn: return "1nn";
    case Method::centroid: return "centroid";
    case Method::rf: return "rf";
    case Method::svm_ovo: return "svm-ovo";
    case Method::svm_ova: return "svm-ova";
    case Method::multiclass: return "multiclass";
    case Method::treeloss: return "treeloss";
    case Method::structured: return "structured";
    case Method::coc: return "coc";
    case Method::dsvm: return "dsvm";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  return std::nullopt;
}

bool method_uses_c(Method m) {
  switch (m) {
    case Method::one_nn:
    case Method::centroid:
    case Method::rf: return false;
    default: return true;
  }
}

bool method_needs_tree(Method m) {
  return m == Method::treeloss || m == Method::structured || m == Method::coc;
}

namespace {

std::vector<std::string> species_to_json(const SpeciesTable& t) { return t.codes(); }

SpeciesTable species_from_json(const json& j) {
  return SpeciesTable::from_codes(j.get<std::vector<std::string>>());
}

ordered_json linear_to_json(const LinearModel& m) {
  ordered_json j;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["degenerate"] = m.degenerate;
  j["converged"] = m.converged;
  return j;
}

LinearModel linear_from_json(const json& j) {
  LinearModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.degenerate = j.at("degenerate").get<bool>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

// ---------------------------------------------------------------- 1-NN

class NnModel : public TrainedModel {
 public:
  NnModel(const LabeledDataset& data, std::span<const int> rows) {
    store_.p = data.p;
    store_.species = data.species;
    for (int r : rows) {
      store_.spectra.push_back(data.spectra[static_cast<std::size_t>(r)]);
      store_.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
      store_.strain_ids.push_back(data.strain_ids[static_cast<std::size_t>(r)]);
      store_.spectrum_ids.push_back(data.spectrum_ids[static_cast<std::size_t>(r)]);
    }
    rows_.resize(store_.spectra.size());
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) rows_[static_cast<std::size_t>(i)] = i;
  }

  explicit NnModel(const json& j) {
    store_.p = j.at("p").get<int>();
    store_.species = species_from_json(j.at("species"));
    store_.spectra = j.at("spectra").get<std::vector<Spectrum>>();
    store_.labels = j.at("labels").get<std::vector<int>>();
    store_.strain_ids.assign(store_.spectra.size(), "");
    store_.spectrum_ids.assign(store_.spectra.size(), "");
    rows_.resize(store_.spectra.size());
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) rows_[static_cast<std::size_t>(i)] = i;
  }

  int predict_one(const Spectrum& x) const override { return predict_1nn(store_, rows_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = "1nn";
    j["p"] = store_.p;
    j["species"] = species_to_json(store_.species);
    j["spectra"] = store_.spectra;
    j["labels"] = store_.labels;
    return j;
  }

  const SpeciesTable& species() const override { return store_.species; }
  int dim() const override { return store_.p; }

 private:
  LabeledDataset store_;
  std::vector<int> rows_;
};

// ---------------------------------------------------------------- centroid

class CentroidTrained : public TrainedModel {
 public:
  explicit CentroidTrained(CentroidModel m) : m_(std::move(m)) {}

  explicit CentroidTrained(const json& j) {
    m_.p = j.at("p").get<int>();
    m_.species = species_from_json(j.at("species"));
    m_.species_ids = j.at("species_ids").get<std::vector<int>>();
    m_.centroids = j.at("centroids").get<std::vector<Spectrum>>();
  }

  int predict_one(const Spectrum& x) const override { return predict_centroid(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = "centroid";
    j["p"] = m_.p;
    j["species"] = species_to_json(m_.species);
    j["species_ids"] = m_.species_ids;
    j["centroids"] = m_.centroids;
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.p; }

 private:
  CentroidModel m_;
};

// ---------------------------------------------------------------- forest

class RfTrained : public TrainedModel {
 public:
  explicit RfTrained(ForestModel m) : m_(std::move(m)) {}

  explicit RfTrained(const json& j) {
    m_.p = j.at("p").get<int>();
    m_.k = j.at("k").get<int>();
    m_.mtry = j.at("mtry").get<int>();
    m_.seed = j.at("seed").get<std::uint64_t>();
    m_.species = species_from_json(j.at("species"));
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        DecisionTree::Node n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.leaf_class = jn.at(4).get<int>();
        if (jn.size() > 5) n.counts = jn.at(5).get<std::vector<int>>();
        t.nodes.push_back(std::move(n));
      }
      m_.trees.push_back(std::move(t));
    }
  }

  int predict_one(const Spectrum& x) const override { return predict_rf(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = "rf";
    j["p"] = m_.p;
    j["k"] = m_.k;
    j["mtry"] = m_.mtry;
    j["seed"] = m_.seed;
    j["species"] = species_to_json(m_.species);
    ordered_json trees = ordered_json::array();
    for (const auto& t : m_.trees) {
      ordered_json jt = ordered_json::array();
      for (const auto& n : t.nodes) {
        ordered_json jn = ordered_json::array({n.feature, n.threshold, n.left, n.right, n.leaf_class});
        if (n.feature < 0) jn.push_back(n.counts);
        jt.push_back(std::move(jn));
      }
      trees.push_back(std::move(jt));
    }
    j["trees"] = std::move(trees);
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.p; }

  const ForestModel& forest() const { return m_; }

 private:
  ForestModel m_;
};

// ---------------------------------------------------------------- OVA / OVO

class OvaTrained : public TrainedModel {
 public:
  explicit OvaTrained(OvaModel m) : m_(std::move(m)) {}

  explicit OvaTrained(const json& j) {
    m_.p = j.at("p").get<int>();
    m_.species = species_from_json(j.at("species"));
    for (const auto& jm : j.at("models")) m_.models.push_back(linear_from_json(jm));
  }

  int predict_one(const Spectrum& x) const override { return predict_ova(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = "svm-ova";
    j["p"] = m_.p;
    j["species"] = species_to_json(m_.species);
    ordered_json models = ordered_json::array();
    for (const auto& lm : m_.models) models.push_back(linear_to_json(lm));
    j["models"] = std::move(models);
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.p; }

 private:
  OvaModel m_;
};

class OvoTrained : public TrainedModel {
 public:
  explicit OvoTrained(OvoModel m) : m_(std::move(m)) {}

  explicit OvoTrained(const json& j) {
    m_.p = j.at("p").get<int>();
    m_.k = j.at("k").get<int>();
    m_.species = species_from_json(j.at("species"));
    for (const auto& jm : j.at("models")) m_.models.push_back(linear_from_json(jm));
  }

  int predict_one(const Spectrum& x) const override { return predict_ovo(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = "svm-ovo";
    j["p"] = m_.p;
    j["k"] = m_.k;
    j["species"] = species_to_json(m_.species);
    ordered_json models = ordered_json::array();
    for (const auto& lm : m_.models) models.push_back(linear_to_json(lm));
    j["models"] = std::move(models);
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.p; }

 private:
  OvoModel m_;
};

// ---------------------------------------------------------------- structured

class StructTrained : public TrainedModel {
 public:
  StructTrained(StructuredModel m, std::string method) : m_(std::move(m)), method_(std::move(method)) {}

  explicit StructTrained(const json& j) {
    method_ = j.at("method").get<std::string>();
    m_.species = species_from_json(j.at("species"));
    const auto& jm = j.at("map");
    m_.map.kind = jm.at("kind").get<std::string>() == "tree_path" ? FeatureMapKind::tree_path
                                                                  : FeatureMapKind::class_indicator;
    m_.map.p = jm.at("p").get<int>();
    m_.map.n_classes = jm.at("n_classes").get<int>();
    m_.map.n_blocks = jm.at("n_blocks").get<int>();
    m_.map.blocks_of_class = jm.at("blocks_of_class").get<std::vector<std::vector<int>>>();
    m_.map.tree_hash = jm.at("tree_hash").get<std::uint64_t>();
    m_.converged = j.at("converged").get<bool>();
    m_.n_cuts = j.at("n_cuts").get<int>();
    const auto blocks = j.at("block_weights").get<std::vector<std::vector<double>>>();
    m_.weights.assign(m_.map.joint_dim(), 0.0);
    for (int b = 0; b < m_.map.n_blocks; ++b)
      for (int f = 0; f < m_.map.p; ++f)
        m_.weights[static_cast<std::size_t>(f) * static_cast<std::size_t>(m_.map.n_blocks) + static_cast<std::size_t>(b)] =
            blocks[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
  }

  int predict_one(const Spectrum& x) const override { return predict(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = method_;
    j["species"] = species_to_json(m_.species);
    ordered_json jm;
    jm["kind"] = m_.map.kind == FeatureMapKind::tree_path ? "tree_path" : "class_indicator";
    jm["p"] = m_.map.p;
    jm["n_classes"] = m_.map.n_classes;
    jm["n_blocks"] = m_.map.n_blocks;
    jm["blocks_of_class"] = m_.map.blocks_of_class;
    jm["tree_hash"] = m_.map.tree_hash;
    j["map"] = std::move(jm);
    j["converged"] = m_.converged;
    j["n_cuts"] = m_.n_cuts;
    ordered_json blocks = ordered_json::array();
    for (int b = 0; b < m_.map.n_blocks; ++b) blocks.push_back(m_.block_weights(b));
    j["block_weights"] = std::move(blocks);
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.map.p; }
  bool converged() const override { return m_.converged; }

  const StructuredModel& model() const { return m_; }

 private:
  StructuredModel m_;
  std::string method_;
};

// ---------------------------------------------------------------- cascades

class CascadeTrained : public TrainedModel {
 public:
  CascadeTrained(CascadeModel m, std::string method) : m_(std::move(m)), method_(std::move(method)) {}

  explicit CascadeTrained(const json& j) {
    method_ = j.at("method").get<std::string>();
    m_.tree = parse_tree(j.at("newick").get<std::string>());
    if (m_.tree.hash() != j.at("tree_hash").get<std::uint64_t>())
      throw std::runtime_error("cascade model: tree hash mismatch");
    m_.p = j.at("p").get<int>();
    m_.species = species_from_json(j.at("species"));
    m_.species_of_leaf = j.at("species_of_leaf").get<std::vector<int>>();
    m_.model_of_node.assign(static_cast<std::size_t>(m_.tree.n_nodes()), -1);
    for (const auto& jn : j.at("nodes")) {
      CascadeModel::NodeModel nm;
      nm.node = jn.at("node").get<int>();
      nm.children = jn.at("children").get<std::vector<int>>();
      for (int r : jn.at("reachable").get<std::vector<int>>())
        nm.reachable.push_back(static_cast<char>(r));
      for (const auto& jm : jn.at("models")) nm.models.push_back(linear_from_json(jm));
      m_.model_of_node[static_cast<std::size_t>(nm.node)] = static_cast<int>(m_.node_models.size());
      m_.node_models.push_back(std::move(nm));
    }
  }

  int predict_one(const Spectrum& x) const override { return predict_cascade(m_, x); }

  ordered_json to_json() const override {
    ordered_json j;
    j["format"] = 1;
    j["method"] = method_;
    j["newick"] = m_.tree.to_newick();
    j["tree_hash"] = m_.tree.hash();
    j["p"] = m_.p;
    j["species"] = species_to_json(m_.species);
    j["species_of_leaf"] = m_.species_of_leaf;
    ordered_json nodes = ordered_json::array();
    for (const auto& nm : m_.node_models) {
      ordered_json jn;
      jn["node"] = nm.node;
      jn["children"] = nm.children;
      std::vector<int> reach(nm.reachable.begin(), nm.reachable.end());
      jn["reachable"] = reach;
      ordered_json models = ordered_json::array();
      for (const auto& lm : nm.models) models.push_back(linear_to_json(lm));
      jn["models"] = std::move(models);
      nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    return j;
  }

  const SpeciesTable& species() const override { return m_.species; }
  int dim() const override { return m_.p; }

  const CascadeModel& model() const { return m_; }

 private:
  CascadeModel m_;
  std::string method_;
};

}  // namespace

std::unique_ptr<TrainedModel> train_model(Method method, const MethodContext& ctx,
                                          std::span<const int> rows, double c,
                                          std::uint64_t seed) {
  const LabeledDataset& data = *ctx.data;
  if (method_needs_tree(method) && !ctx.tree)
    throw std::invalid_argument("train_model: method " + method_name(method) + " needs a tree");

  switch (method) {
    case Method::one_nn:
      return std::make_unique<NnModel>(data, rows);
    case Method::centroid:
      return std::make_unique<CentroidTrained>(train_centroid(data, rows));
    case Method::rf: {
      RfConfig cfg = ctx.rf;
      cfg.seed = seed;
      return std::make_unique<RfTrained>(train_rf(data, rows, cfg));
    }
    case Method::svm_ova: {
      BinaryTrainConfig cfg = ctx.binary;
      cfg.C = c;
      cfg.seed = seed;
      return std::make_unique<OvaTrained>(train_ova(data, rows, cfg));
    }
    case Method::svm_ovo: {
      BinaryTrainConfig cfg = ctx.binary;
      cfg.C = c;
      cfg.seed = seed;
      return std::make_unique<OvoTrained>(train_ovo(data, rows, cfg));
    }
    case Method::multiclass: {
      StructTrainConfig cfg = ctx.structured;
      cfg.C = c;
      cfg.loss = LossMatrix::zero_one(data.species.size());
      JointFeatureMap map = JointFeatureMap::class_indicator(data.species.size(), data.p);
      return std::make_unique<StructTrained>(train_one_slack(data, rows, map, cfg), "multiclass");
    }
    case Method::treeloss: {
      StructTrainConfig cfg = ctx.structured;
      cfg.C = c;
      cfg.loss = loss_matrix(*ctx.tree);
      JointFeatureMap map = JointFeatureMap::class_indicator(data.species.size(), data.p);
      return std::make_unique<StructTrained>(train_one_slack(data, rows, map, cfg), "treeloss");
    }
    case Method::structured: {
      StructTrainConfig cfg = ctx.structured;
      cfg.C = c;
      cfg.loss = loss_matrix(*ctx.tree);
      JointFeatureMap map = JointFeatureMap::tree_path(*ctx.tree, data.p);
      return std::make_unique<StructTrained>(train_one_slack(data, rows, map, cfg), "structured");
    }
    case Method::coc: {
      BinaryTrainConfig cfg = ctx.binary;
      cfg.C = c;
      cfg.seed = seed;
      return std::make_unique<CascadeTrained>(train_cascade(*ctx.tree, data, rows, cfg), "coc");
    }
    case Method::dsvm: {
      BinaryTrainConfig cfg = ctx.binary;
      cfg.C = c;
      cfg.seed = seed;
      const TaxonomyTree dendro = build_dendrogram(data, rows);
      return std::make_unique<CascadeTrained>(train_cascade(dendro, data, rows, cfg), "dsvm");
    }
  }
  throw std::logic_error("train_model: unknown method");
}

std::unique_ptr<TrainedModel> model_from_json(const json& j) {
  const std::string method = j.at("method").get<std::string>();
  if (method == "1nn") return std::make_unique<NnModel>(j);
  if (method == "centroid") return std::make_unique<CentroidTrained>(j);
  if (method == "rf") return std::make_unique<RfTrained>(j);
  if (method == "svm-ova") return std::make_unique<OvaTrained>(j);
  if (method == "svm-ovo") return std::make_unique<OvoTrained>(j);
  if (method == "multiclass" || method == "treeloss" || method == "structured")
    return std::make_unique<StructTrained>(j);
  if (method == "coc" || method == "dsvm") return std::make_unique<CascadeTrained>(j);
  throw std::runtime_error("model_from_json: unknown method '" + method + "'");
}

void save_model(const TrainedModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  out << m.to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

std::unique_ptr<TrainedModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace specid
