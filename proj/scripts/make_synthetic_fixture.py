#!/usr/bin/env python3
"""Generate a synthetic dataset with the MicroMass panel structure.

Produces a CSV in the canonical layout (spectrum_id, strain_id, species_code,
f0001..f1300) with the published per-species strain/spectrum counts: 20
species, 213 strains, 571 spectra, p=1300. The spectra themselves are
simulated peak lists (genus + species signatures, strain effects, replicate
noise), so the file exercises the full benchmark pipeline at real scale.

It is NOT the MicroMass dataset; accuracies measured on it are not
comparable to published numbers. Use it for smoke/perf runs only.
"""

import argparse

import numpy as np

# (species_code, n_strains, n_spectra) as published for the panel
PANEL = [
    ("BAC.CEU", 10, 26), ("BAC.THU", 8, 11),
    ("CIT.BRA", 9, 26), ("CIT.FRE", 10, 28),
    ("CLO.DIF", 7, 14), ("CLO.GLY", 9, 16),
    ("ENT.ASB", 10, 29), ("ENT.CLC", 16, 52),
    ("ESH.COL", 20, 60),
    ("HAE.INF", 18, 50), ("HAE.PAR", 9, 21),
    ("LIS.ISI", 9, 29), ("LIS.MNC", 10, 31),
    ("SHG.BOY", 9, 18), ("SHG.FLX", 10, 32), ("SHG.SON", 10, 31),
    ("STR.MIT", 10, 26), ("STR.ORA", 9, 24),
    ("YER.ETC", 10, 27), ("YER.FRD", 10, 20),
]

# species sharing a genus signature pool (E. coli and Shigella share one)
GENUS = {
    "BAC.CEU": "BAC", "BAC.THU": "BAC",
    "CIT.BRA": "CIT", "CIT.FRE": "CIT",
    "CLO.DIF": "CLO", "CLO.GLY": "CLO",
    "ENT.ASB": "ENT", "ENT.CLC": "ENT",
    "ESH.COL": "ESG", "SHG.BOY": "ESG", "SHG.FLX": "ESG", "SHG.SON": "ESG",
    "HAE.INF": "HAE", "HAE.PAR": "HAE",
    "LIS.ISI": "LIS", "LIS.MNC": "LIS",
    "STR.MIT": "STR", "STR.ORA": "STR",
    "YER.ETC": "YER", "YER.FRD": "YER",
}

# pairs whose species signatures barely differ (hard to discriminate)
HARD_PAIRS = [
    ("BAC.CEU", "BAC.THU"),
    ("STR.MIT", "STR.ORA"),
    ("ENT.ASB", "ENT.CLC"),
    ("CIT.BRA", "CIT.FRE"),
    ("ESH.COL", "SHG.BOY"), ("ESH.COL", "SHG.FLX"), ("ESH.COL", "SHG.SON"),
    ("SHG.BOY", "SHG.FLX"), ("SHG.BOY", "SHG.SON"), ("SHG.FLX", "SHG.SON"),
]

P = 1300


def split_counts(total, parts, rng):
    base = total // parts
    counts = np.full(parts, base, dtype=int)
    extra = rng.permutation(parts)[: total - base * parts]
    counts[extra] += 1
    return counts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic_micromass.csv")
    ap.add_argument("--seed", type=int, default=20250810)
    ap.add_argument("--strain-sigma", type=float, default=0.55,
                    help="lognormal sigma of the per-strain peak effects")
    ap.add_argument("--hard-share", type=float, default=0.92,
                    help="fraction of species peaks shared inside a hard pair")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    genus_bins = {}
    for genus in sorted(set(GENUS.values())):
        genus_bins[genus] = rng.choice(P, size=45, replace=False)

    species_profile = {}
    for code, _, _ in PANEL:
        genus = GENUS[code]
        own = rng.choice(P, size=30, replace=False)
        bins = np.concatenate([genus_bins[genus], own])
        intensity = rng.lognormal(mean=2.0, sigma=0.6, size=bins.size)
        species_profile[code] = (bins, intensity)

    # collapse hard pairs onto nearly identical profiles
    for a, b in HARD_PAIRS:
        bins_a, int_a = species_profile[a]
        bins_b, int_b = species_profile[b]
        n_shared = int(round(args.hard_share * bins_b.size))
        take = rng.permutation(bins_b.size)[:n_shared]
        bins_b = bins_b.copy()
        int_b = int_b.copy()
        bins_b[take] = bins_a[take]
        int_b[take] = int_a[take] * rng.lognormal(0.0, 0.05, size=n_shared)
        species_profile[b] = (bins_b, int_b)

    rows = []
    spectrum_no = 0
    for code, n_strains, n_spectra in PANEL:
        bins, base_intensity = species_profile[code]
        per_strain = split_counts(n_spectra, n_strains, rng)
        for strain_idx in range(n_strains):
            strain_id = f"{code}.st{strain_idx:02d}"
            strain_factor = rng.lognormal(0.0, args.strain_sigma, size=bins.size)
            strain_present = rng.random(bins.size) > 0.06
            extra_bins = rng.choice(P, size=6, replace=False)
            extra_intensity = rng.lognormal(mean=1.2, sigma=0.5, size=extra_bins.size)
            for _ in range(per_strain[strain_idx]):
                x = np.zeros(P)
                replicate = rng.lognormal(0.0, 0.15, size=bins.size)
                present = strain_present & (rng.random(bins.size) > 0.03)
                x[bins[present]] += (base_intensity * strain_factor * replicate)[present]
                x[extra_bins] += extra_intensity * rng.lognormal(0.0, 0.2, size=extra_bins.size)
                rows.append((f"sp{spectrum_no:04d}", strain_id, code, x))
                spectrum_no += 1

    header = "spectrum_id,strain_id,species_code," + ",".join(
        f"f{j + 1:04d}" for j in range(P))
    with open(args.out, "w") as out:
        out.write(header + "\n")
        for sid, strain, code, x in rows:
            vals = ",".join("0" if v == 0.0 else f"{v:.6g}" for v in x)
            out.write(f"{sid},{strain},{code},{vals}\n")
    print(f"wrote {len(rows)} spectra to {args.out}")


if __name__ == "__main__":
    main()
