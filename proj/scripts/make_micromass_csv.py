#!/usr/bin/env python3
"""Assemble the canonical MicroMass CSV from the UCI distribution.

The UCI download ships the pure-spectra data as a feature matrix plus a
separate metadata table (one row per spectrum). This script joins the two
into the single canonical file the benchmark consumes:

    spectrum_id,strain_id,species_code,f0001,...,f1300

Column names in the wild vary between mirrors, so the relevant names are
flags. Typical usage:

    python3 scripts/make_micromass_csv.py \
        --matrix pure_spectra_matrix.csv \
        --metadata pure_spectra_metadata.csv \
        --out data/micromass.csv

Expectations, each overridable:
  * the matrix is delimited text; every row is one spectrum; feature columns
    are in ascending mass-bin order; an optional leading id column is matched
    against the metadata (otherwise rows are joined by position);
  * the metadata carries one row per spectrum with at least a strain
    identifier and a species code (three-letter genus dot species form,
    e.g. BAC.CEU). If the species column holds full names instead, map them
    with --species-map (a two-column CSV: name,code).

The script validates the assembled panel (571 spectra, 213 strains,
20 species, 1300 features) and refuses to write a file that does not match
unless --force is given.
"""

import argparse
import csv
import sys


def sniff_delimiter(path):
    with open(path, newline="") as f:
        head = f.readline()
    for d in (",", ";", "\t", " "):
        if head.count(d) >= 3:
            return d
    return ","


def read_table(path):
    delim = sniff_delimiter(path)
    with open(path, newline="") as f:
        return [row for row in csv.reader(f, delimiter=delim) if row and any(c.strip() for c in row)]


def main():
    ap = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--matrix", required=True, help="feature matrix file")
    ap.add_argument("--metadata", required=True, help="per-spectrum metadata file")
    ap.add_argument("--out", default="data/micromass.csv")
    ap.add_argument("--matrix-id-column", default=None,
                    help="name of the spectrum-id column in the matrix; omit to join by position")
    ap.add_argument("--matrix-no-header", action="store_true",
                    help="matrix has no header row")
    ap.add_argument("--id-column", default="spectrum_id",
                    help="metadata column with the spectrum id (fallback: row position)")
    ap.add_argument("--strain-column", default="strain_id",
                    help="metadata column with the strain identifier")
    ap.add_argument("--species-column", default="species_code",
                    help="metadata column with the species code or name")
    ap.add_argument("--species-map", default=None,
                    help="optional CSV mapping species names to short codes")
    ap.add_argument("--force", action="store_true",
                    help="write the output even if the panel shape is unexpected")
    args = ap.parse_args()

    matrix = read_table(args.matrix)
    meta = read_table(args.metadata)

    meta_header = [c.strip() for c in meta[0]]
    meta_rows = meta[1:]

    def meta_col(name, required=True):
        if name in meta_header:
            return meta_header.index(name)
        if required:
            sys.exit(f"error: metadata has no column '{name}' (have: {meta_header})")
        return None

    strain_idx = meta_col(args.strain_column)
    species_idx = meta_col(args.species_column)
    id_idx = meta_col(args.id_column, required=False)

    species_map = {}
    if args.species_map:
        for row in read_table(args.species_map):
            if len(row) >= 2:
                species_map[row[0].strip()] = row[1].strip()

    if args.matrix_no_header:
        matrix_header, matrix_rows = None, matrix
    else:
        matrix_header, matrix_rows = [c.strip() for c in matrix[0]], matrix[1:]

    feature_start = 0
    matrix_ids = None
    if args.matrix_id_column:
        if matrix_header is None:
            sys.exit("error: --matrix-id-column needs a matrix header")
        if args.matrix_id_column not in matrix_header:
            sys.exit(f"error: matrix has no column '{args.matrix_id_column}'")
        idc = matrix_header.index(args.matrix_id_column)
        matrix_ids = [row[idc].strip() for row in matrix_rows]
        feature_start = idc + 1  # assume id first, features after

    if len(matrix_rows) != len(meta_rows):
        sys.exit(f"error: {len(matrix_rows)} matrix rows but {len(meta_rows)} metadata rows")

    # join by id when both sides carry one, by position otherwise
    order = range(len(matrix_rows))
    if matrix_ids is not None and id_idx is not None:
        by_id = {meta_rows[i][id_idx].strip(): i for i in range(len(meta_rows))}
        try:
            order = [by_id[mid] for mid in matrix_ids]
        except KeyError as missing:
            sys.exit(f"error: matrix spectrum id {missing} not present in the metadata")

    out_rows = []
    strains = set()
    species = set()
    p = None
    for mrow, mi in zip(matrix_rows, order):
        features = [v.strip() for v in mrow[feature_start:]]
        if p is None:
            p = len(features)
        elif len(features) != p:
            sys.exit("error: ragged matrix rows")
        meta_row = meta_rows[mi]
        sid = meta_row[id_idx].strip() if id_idx is not None else f"sp{mi:04d}"
        strain = meta_row[strain_idx].strip()
        code = meta_row[species_idx].strip()
        code = species_map.get(code, code)
        strains.add(strain)
        species.add(code)
        out_rows.append((sid, strain, code, features))

    ok = len(out_rows) == 571 and len(strains) == 213 and len(species) == 20 and p == 1300
    if not ok:
        msg = (f"panel shape is {len(out_rows)} spectra / {len(strains)} strains / "
               f"{len(species)} species / p={p}, expected 571/213/20/1300")
        if not args.force:
            sys.exit("error: " + msg + " (use --force to write anyway)")
        print("warning: " + msg, file=sys.stderr)

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["spectrum_id", "strain_id", "species_code"] +
                   [f"f{j + 1:04d}" for j in range(p)])
        for sid, strain, code, features in out_rows:
            w.writerow([sid, strain, code] + features)
    print(f"wrote {len(out_rows)} spectra to {args.out}")


if __name__ == "__main__":
    main()
