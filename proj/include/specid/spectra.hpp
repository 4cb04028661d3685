#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace specid {

// A peak-list mass spectrum: dense vector of nonnegative bin intensities.
using Spectrum = std::vector<double>;

// Bidirectional map between species ids [0, K) and short species codes.
// Ids are assigned in lexicographic code order, so they are stable across
// loads of the same panel.
class SpeciesTable {
 public:
  SpeciesTable() = default;
  static SpeciesTable from_codes(std::vector<std::string> codes);

  int id_of(const std::string& code) const;  // -1 when unknown
  const std::string& code_of(int id) const;
  int size() const { return static_cast<int>(codes_.size()); }
  const std::vector<std::string>& codes() const { return codes_; }

  bool operator==(const SpeciesTable& o) const { return codes_ == o.codes_; }

 private:
  std::vector<std::string> codes_;
  std::unordered_map<std::string, int> index_;
};

// Spectra with species labels and strain identifiers. strain -> species is
// many-to-one; all parallel arrays share the same length.
struct LabeledDataset {
  int p = 0;
  std::vector<std::string> spectrum_ids;
  std::vector<std::string> strain_ids;
  std::vector<int> labels;  // species id per spectrum
  std::vector<Spectrum> spectra;
  SpeciesTable species;

  std::size_t size() const { return spectra.size(); }
};

// Loads the canonical CSV (header: spectrum_id,strain_id,species_code,
// feature columns in ascending bin order). When `known_species` is given,
// rows with species codes outside it are rejected; otherwise the table is
// built from the file. Throws std::runtime_error on I/O failure, ragged
// rows, negative or non-finite intensities, or a strain observed with two
// species codes.
LabeledDataset load_dataset(const std::string& csv_path,
                            const SpeciesTable* known_species = nullptr);

// Scales to unit Euclidean norm. Throws on the all-zero spectrum.
Spectrum normalize_unit_norm(const Spectrum& s);

// Applies normalize_unit_norm to every row in place.
void normalize_dataset(LabeledDataset& d);

struct SpeciesCounts {
  std::string code;
  int strains = 0;
  int spectra = 0;
};

// Per-species strain and spectrum counts, in species-id order.
std::vector<SpeciesCounts> dataset_summary(const LabeledDataset& d);

}  // namespace specid
