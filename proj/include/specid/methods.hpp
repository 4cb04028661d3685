#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "specid/baselines.hpp"
#include "specid/composite.hpp"
#include "specid/linear_svm.hpp"
#include "specid/spectra.hpp"
#include "specid/struct_svm.hpp"
#include "specid/taxonomy.hpp"

namespace specid {

// The ten benchmarked classifiers.
enum class Method {
  one_nn,
  centroid,
  rf,
  svm_ovo,
  svm_ova,
  multiclass,
  treeloss,
  structured,
  coc,
  dsvm,
};

const std::vector<Method>& all_methods();
std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);
bool method_uses_c(Method m);     // SVM family: grid-searched C parameter
bool method_needs_tree(Method m); // taxonomy consumed at train time

struct MethodContext {
  const LabeledDataset* data = nullptr;
  const TaxonomyTree* tree = nullptr;
  BinaryTrainConfig binary;       // C overridden per training
  StructTrainConfig structured;   // loss/C overridden per training
  RfConfig rf;                    // seed overridden per training
};

// A trained classifier behind a uniform surface.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;
  virtual int predict_one(const Spectrum& x) const = 0;
  virtual nlohmann::ordered_json to_json() const = 0;
  virtual const SpeciesTable& species() const = 0;
  virtual int dim() const = 0;
  virtual bool converged() const { return true; }
};

// Trains `method` on the given dataset rows. `c` is ignored by methods
// without a C parameter. `seed` feeds every stochastic component.
std::unique_ptr<TrainedModel> train_model(Method method, const MethodContext& ctx,
                                          std::span<const int> rows, double c,
                                          std::uint64_t seed);

// Reconstructs a model from its serialized record.
std::unique_ptr<TrainedModel> model_from_json(const nlohmann::json& j);

void save_model(const TrainedModel& m, const std::string& path);
std::unique_ptr<TrainedModel> load_model(const std::string& path);

}  // namespace specid
