#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "specid/rng.hpp"
#include "specid/spectra.hpp"

using namespace specid;

namespace {

std::filesystem::path write_temp_csv(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

double norm(const Spectrum& s) {
  double sq = 0.0;
  for (double v : s) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

TEST_SUITE_BEGIN("spectra");

TEST_CASE("load_dataset reads the canonical csv") {
  const auto path = write_temp_csv("specid_ok.csv",
                                   "spectrum_id,strain_id,species_code,f0001,f0002,f0003\n"
                                   "sp1,strainA,AAA,0,1.5,2\n"
                                   "sp2,strainA,AAA,1,0,0.25\n"
                                   "sp3,strainB,BBB,3,4,0\n");
  const auto d = load_dataset(path.string());
  CHECK(d.p == 3);
  CHECK(d.size() == 3);
  CHECK(d.spectra.size() == d.labels.size());
  CHECK(d.labels.size() == d.strain_ids.size());
  CHECK(d.species.size() == 2);
  CHECK(d.species.id_of("AAA") == 0);
  CHECK(d.species.id_of("BBB") == 1);
  CHECK(d.labels[2] == 1);
  CHECK(d.spectra[0][1] == doctest::Approx(1.5));
}

TEST_CASE("load_dataset rejects a strain with two species codes") {
  const auto path = write_temp_csv("specid_strain2.csv",
                                   "spectrum_id,strain_id,species_code,f0001\n"
                                   "sp1,strainA,AAA,1\n"
                                   "sp2,strainA,BBB,1\n");
  CHECK_THROWS_WITH_AS(load_dataset(path.string()),
                       doctest::Contains("observed with species codes"), std::runtime_error);
}

TEST_CASE("load_dataset rejects ragged rows, bad values, unknown codes") {
  const auto ragged = write_temp_csv("specid_ragged.csv",
                                     "spectrum_id,strain_id,species_code,f0001,f0002\n"
                                     "sp1,strainA,AAA,1\n");
  CHECK_THROWS_AS(load_dataset(ragged.string()), std::runtime_error);

  const auto negative = write_temp_csv("specid_neg.csv",
                                       "spectrum_id,strain_id,species_code,f0001\n"
                                       "sp1,strainA,AAA,-1\n");
  CHECK_THROWS_AS(load_dataset(negative.string()), std::runtime_error);

  const auto nonfinite = write_temp_csv("specid_nan.csv",
                                        "spectrum_id,strain_id,species_code,f0001\n"
                                        "sp1,strainA,AAA,nan\n");
  CHECK_THROWS_AS(load_dataset(nonfinite.string()), std::runtime_error);

  const auto ok = write_temp_csv("specid_known.csv",
                                 "spectrum_id,strain_id,species_code,f0001\n"
                                 "sp1,strainA,ZZZ,1\n");
  const auto known = SpeciesTable::from_codes({"AAA", "BBB"});
  CHECK_THROWS_WITH_AS(load_dataset(ok.string(), &known), doctest::Contains("unknown species"),
                       std::runtime_error);
  CHECK_THROWS_AS(load_dataset("/nonexistent/specid.csv"), std::runtime_error);
}

TEST_CASE("normalize_unit_norm on the 3-4-5 triangle") {
  Spectrum s{3.0, 4.0, 0.0, 0.0};
  const auto out = normalize_unit_norm(s);
  CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(out[2] == 0.0);
}

TEST_CASE("normalize_unit_norm is idempotent and degree-0 homogeneous") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Spectrum v(16);
    for (auto& x : v) x = rng.uniform();
    const auto u = normalize_unit_norm(v);
    CHECK(std::fabs(norm(u) - 1.0) <= 1e-12);

    const auto twice = normalize_unit_norm(u);
    for (std::size_t j = 0; j < u.size(); ++j) CHECK(std::fabs(twice[j] - u[j]) <= 1e-12);

    Spectrum scaled = v;
    const double c = 0.5 + 10.0 * rng.uniform();
    for (auto& x : scaled) x *= c;
    const auto w = normalize_unit_norm(scaled);
    for (std::size_t j = 0; j < u.size(); ++j) CHECK(std::fabs(w[j] - u[j]) <= 1e-12);
  }
}

TEST_CASE("normalize_unit_norm rejects the all-zero spectrum") {
  CHECK_THROWS_AS(normalize_unit_norm(Spectrum(8, 0.0)), std::runtime_error);
}

TEST_CASE("dataset_summary counts strains and spectra per species") {
  const auto path = write_temp_csv("specid_summary.csv",
                                   "spectrum_id,strain_id,species_code,f0001\n"
                                   "s1,stA,AAA,1\n"
                                   "s2,stA,AAA,2\n"
                                   "s3,stB,AAA,3\n"
                                   "s4,stC,BBB,4\n");
  const auto d = load_dataset(path.string());
  const auto summary = dataset_summary(d);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].code == "AAA");
  CHECK(summary[0].strains == 2);
  CHECK(summary[0].spectra == 3);
  CHECK(summary[1].code == "BBB");
  CHECK(summary[1].strains == 1);
  CHECK(summary[1].spectra == 1);

  CHECK(dataset_summary(LabeledDataset{}).empty());
}

TEST_SUITE_END();
