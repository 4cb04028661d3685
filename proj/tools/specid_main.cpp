// specid - hierarchy-aware classification of peak-list mass spectra.
//
// Subcommands:
//   run      full strain-aware cross-validation benchmark, report emission
//   train    fit one classifier on a whole dataset, serialize it
//   predict  label spectra with a serialized model

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specid/benchmark.hpp"
#include "specid/methods.hpp"

namespace {

std::vector<specid::Method> parse_methods(const std::string& spec) {
  std::vector<specid::Method> out;
  if (spec == "all" || spec.empty()) return specid::all_methods();
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = spec.find(',', start);
    const std::string name = spec.substr(start, comma == std::string::npos ? spec.size() - start
                                                                           : comma - start);
    if (!name.empty()) {
      const auto m = specid::method_from_name(name);
      if (!m) throw CLI::ValidationError("--methods", "unknown method '" + name + "'");
      out.push_back(*m);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw CLI::ValidationError("--methods", "no methods selected");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchy-aware multiclass classification of mass spectra"};
  app.require_subcommand(1);

  // ---- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run the cross-validation benchmark");
  specid::BenchmarkConfig cfg;
  std::string methods_spec = "all";
  run->set_config("--config", "", "Flat key=value config file; flags override it");
  run->add_option("--dataset", cfg.dataset_path, "Dataset CSV")->required();
  run->add_option("--tree", cfg.tree_path, "Taxonomy Newick file")->required();
  run->add_option("--methods", methods_spec, "Comma list of methods or 'all'");
  run->add_option("--grid", cfg.grid_exponents, "C grid as powers of ten")->delimiter(',');
  run->add_option("--epsilon", cfg.epsilon, "Cutting-plane precision");
  run->add_option("--seed", cfg.seed, "Global RNG seed");
  run->add_option("--jobs", cfg.jobs, "Worker threads over outer folds");
  run->add_option("--out", cfg.out_dir, "Output directory");
  run->add_flag("--smoke", cfg.smoke, "First 20 outer folds, 3-point grid");
  run->add_option("--inner-folds", cfg.inner_folds, "Inner CV fold count");
  run->add_option("--svm-tol", cfg.svm_tol, "Binary SVM dual tolerance");
  run->add_option("--svm-max-iter", cfg.svm_max_iter, "Binary SVM epoch cap");
  run->add_option("--struct-max-cuts", cfg.struct_max_cuts, "Cutting-plane cap");
  run->add_option("--rf-trees", cfg.rf_trees, "Random forest size");

  // ---- train -------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train one model on a full dataset");
  std::string train_method, train_dataset, train_tree, train_out = "model.json";
  double train_c = 1.0;
  std::uint64_t train_seed = 1;
  double train_epsilon = 0.1;
  train->add_option("--method", train_method, "Method name")->required();
  train->add_option("--dataset", train_dataset, "Dataset CSV")->required();
  train->add_option("--tree", train_tree, "Taxonomy Newick file (tree methods)");
  train->add_option("--c", train_c, "Regularization parameter C");
  train->add_option("--seed", train_seed, "RNG seed");
  train->add_option("--epsilon", train_epsilon, "Cutting-plane precision");
  train->add_option("--out", train_out, "Model output path");

  // ---- predict -----------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Label spectra with a model");
  std::string predict_model, predict_spectra, predict_out = "predictions.csv";
  predict->add_option("--model", predict_model, "Serialized model")->required();
  predict->add_option("--spectra", predict_spectra, "Spectra CSV")->required();
  predict->add_option("--out", predict_out, "Predictions CSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cfg.methods = parse_methods(methods_spec);
      const auto result = specid::run_benchmark(cfg);
      for (const auto& mr : result.methods)
        std::printf("%-12s accuracy %6.2f%%  correct %d  within-genus %d  within-Gram %d  distinct-Gram %d\n",
                    specid::method_name(mr.method).c_str(), 100.0 * mr.accuracy.overall,
                    mr.severity.correct, mr.severity.within_genus, mr.severity.within_gram,
                    mr.severity.distinct_gram);
      std::printf("report written to %s\n", cfg.out_dir.c_str());
      return 0;
    }

    if (train->parsed()) {
      const auto method = specid::method_from_name(train_method);
      if (!method) {
        std::fprintf(stderr, "error: unknown method '%s'\n", train_method.c_str());
        return 1;
      }
      specid::LabeledDataset data = specid::load_dataset(train_dataset);
      specid::normalize_dataset(data);
      specid::TaxonomyTree tree;
      specid::MethodContext ctx;
      ctx.data = &data;
      ctx.structured.epsilon = train_epsilon;
      if (!train_tree.empty()) {
        tree = specid::load_tree(train_tree);
        if (!(tree.species() == data.species))
          throw std::runtime_error("tree leaves do not match the dataset species");
        ctx.tree = &tree;
      }
      std::vector<int> rows(data.size());
      for (int i = 0; i < static_cast<int>(rows.size()); ++i) rows[static_cast<std::size_t>(i)] = i;
      const auto model = specid::train_model(*method, ctx, rows, train_c, train_seed);
      specid::save_model(*model, train_out);
      std::printf("model written to %s\n", train_out.c_str());
      return 0;
    }

    if (predict->parsed()) {
      const auto model = specid::load_model(predict_model);
      specid::LabeledDataset data = specid::load_dataset(predict_spectra, &model->species());
      if (data.p != model->dim())
        throw std::runtime_error("dimension mismatch: model expects p=" +
                                 std::to_string(model->dim()) + ", dataset has p=" +
                                 std::to_string(data.p));
      specid::normalize_dataset(data);
      std::ofstream out(predict_out);
      if (!out) throw std::runtime_error("cannot open output file: " + predict_out);
      out << "spectrum_id,predicted_code\n";
      for (std::size_t i = 0; i < data.size(); ++i) {
        const int label = model->predict_one(data.spectra[i]);
        out << data.spectrum_ids[i] << ',' << model->species().code_of(label) << '\n';
      }
      std::printf("predictions written to %s\n", predict_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
