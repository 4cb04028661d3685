#include "specid/spectra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace specid {

SpeciesTable SpeciesTable::from_codes(std::vector<std::string> codes) {
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  SpeciesTable t;
  t.codes_ = std::move(codes);
  for (int i = 0; i < static_cast<int>(t.codes_.size()); ++i) t.index_[t.codes_[i]] = i;
  return t;
}

int SpeciesTable::id_of(const std::string& code) const {
  auto it = index_.find(code);
  return it == index_.end() ? -1 : it->second;
}

const std::string& SpeciesTable::code_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("species id out of range");
  return codes_[static_cast<std::size_t>(id)];
}

namespace {

void split_csv_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.emplace_back(line, start);
      return;
    }
    out.emplace_back(line, start, comma - start);
    start = comma + 1;
  }
}

double parse_intensity(const std::string& field, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(col) +
                             ": cannot parse intensity '" + field + "'");
  if (!std::isfinite(v))
    throw std::runtime_error("row " + std::to_string(row) + ": non-finite intensity");
  if (v < 0.0)
    throw std::runtime_error("row " + std::to_string(row) + ": negative intensity " + field);
  return v;
}

}  // namespace

LabeledDataset load_dataset(const std::string& csv_path, const SpeciesTable* known_species) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + csv_path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> fields;
  split_csv_line(line, fields);
  if (fields.size() < 4 || fields[0] != "spectrum_id" || fields[1] != "strain_id" ||
      fields[2] != "species_code")
    throw std::runtime_error(
        "bad header: expected spectrum_id,strain_id,species_code,<feature columns>");
  const std::size_t n_cols = fields.size();
  const int p = static_cast<int>(n_cols - 3);

  LabeledDataset d;
  d.p = p;
  std::vector<std::string> row_codes;
  std::unordered_map<std::string, std::string> species_of_strain;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    split_csv_line(line, fields);
    if (fields.size() != n_cols)
      throw std::runtime_error("row " + std::to_string(row) + ": expected " +
                               std::to_string(n_cols) + " columns, got " +
                               std::to_string(fields.size()));

    const std::string& strain = fields[1];
    const std::string& code = fields[2];
    if (known_species && known_species->id_of(code) < 0)
      throw std::runtime_error("row " + std::to_string(row) + ": unknown species code '" + code +
                               "'");
    auto [it, inserted] = species_of_strain.emplace(strain, code);
    if (!inserted && it->second != code)
      throw std::runtime_error("strain '" + strain + "' observed with species codes '" +
                               it->second + "' and '" + code + "'");

    Spectrum s(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j)
      s[static_cast<std::size_t>(j)] = parse_intensity(fields[static_cast<std::size_t>(j) + 3], row, j + 3);

    d.spectrum_ids.push_back(fields[0]);
    d.strain_ids.push_back(strain);
    row_codes.push_back(code);
    d.spectra.push_back(std::move(s));
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading " + csv_path);

  if (known_species) {
    d.species = *known_species;
  } else {
    d.species = SpeciesTable::from_codes(row_codes);
  }
  d.labels.reserve(row_codes.size());
  for (const auto& code : row_codes) d.labels.push_back(d.species.id_of(code));
  return d;
}

Spectrum normalize_unit_norm(const Spectrum& s) {
  double sq = 0.0;
  for (double v : s) sq += v * v;
  if (sq <= 0.0) throw std::runtime_error("cannot normalize an all-zero spectrum");
  const double inv = 1.0 / std::sqrt(sq);
  Spectrum out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * inv;
  return out;
}

void normalize_dataset(LabeledDataset& d) {
  for (auto& s : d.spectra) s = normalize_unit_norm(s);
}

std::vector<SpeciesCounts> dataset_summary(const LabeledDataset& d) {
  if (d.size() == 0) return {};
  const int k = d.species.size();
  std::vector<SpeciesCounts> out(static_cast<std::size_t>(k));
  std::vector<std::unordered_map<std::string, int>> strains(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)].code = d.species.code_of(i);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto& row = out[static_cast<std::size_t>(d.labels[i])];
    ++row.spectra;
    ++strains[static_cast<std::size_t>(d.labels[i])][d.strain_ids[i]];
  }
  for (int i = 0; i < k; ++i)
    out[static_cast<std::size_t>(i)].strains = static_cast<int>(strains[static_cast<std::size_t>(i)].size());
  return out;
}

}  // namespace specid
