#!/usr/bin/env python3
# SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the test fixtures under tests/data with RDKit.

Molecules are assembled from ring scaffolds and substituents with a seeded
RNG, sanitized, kekulized and written as bracket-free SMILES together with
RDKit-computed properties. The SMILES corpus records node count, edge count
and ring sizes (smallest set of smallest rings) for the parser tests.
"""

import argparse
import json
import random
from pathlib import Path

from rdkit import Chem, RDLogger
from rdkit.Chem import Crippen, rdMolDescriptors

RDLogger.DisableLog("rdApp.*")

SCAFFOLDS = [
    "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1ccsc1", "C1CCCCC1", "C1CCNCC1", "C1CCOC1",
    "C1CC1", "C1CCC1", "C1CCCC1", "c1ccc2ccccc2c1", "c1ncncn1", "C1COCCN1", "c1cn[nH]c1",
    "C1CCCCCC1", "c1ccc2[nH]ccc2c1", "O=C1CCCN1", "c1cnccn1", "C1CC2CCC1C2", "c1ccc2c(c1)CCC2",
    "CCCC", "CCOCC", "CC(C)C",
]
SUBSTITUENTS = [
    "C", "CC", "O", "N", "F", "Cl", "Br", "C(=O)O", "C#N", "OC", "C(F)(F)F", "C(=O)N", "S",
    "N(C)C", "CO", "C=O", "c1ccccc1", "C1CC1", "OCC", "S(=O)(=O)N", "CCN", "I", "P(=O)(O)O", "B(O)O",
]


def attach(rng, mol):
    """Joins one substituent to a random atom that still has a hydrogen."""
    sub = Chem.MolFromSmiles(rng.choice(SUBSTITUENTS))
    sites = [a.GetIdx() for a in mol.GetAtoms() if a.GetTotalNumHs() > 0]
    if not sites:
        return None
    site = rng.choice(sites)
    combo = Chem.RWMol(Chem.CombineMols(mol, sub))
    offset = mol.GetNumAtoms()
    combo.AddBond(site, offset, Chem.BondType.SINGLE)
    atom = combo.GetAtomWithIdx(site)
    if atom.GetNumExplicitHs() > 0:
        atom.SetNumExplicitHs(atom.GetNumExplicitHs() - 1)
    try:
        out = combo.GetMol()
        Chem.SanitizeMol(out)
        return out
    except Exception:
        return None


def bracket_free(mol):
    m = Chem.Mol(mol)
    Chem.Kekulize(m, clearAromaticFlags=True)
    smi = Chem.MolToSmiles(m, kekuleSmiles=True, isomericSmiles=False)
    return None if "[" in smi or "." in smi else smi


def properties(mol):
    return {
        "ring_count": float(rdMolDescriptors.CalcNumRings(mol)),
        "heavy_atom_count": float(mol.GetNumHeavyAtoms()),
        "logp": round(Crippen.MolLogP(mol), 6),
    }


def molecules(seed, count, lo, hi):
    rng = random.Random(seed)
    seen, out = set(), []
    while len(out) < count:
        mol = Chem.MolFromSmiles(rng.choice(SCAFFOLDS))
        target = rng.randint(lo, hi)
        while mol is not None and mol.GetNumHeavyAtoms() < target:
            mol = attach(rng, mol)
        if mol is None or not lo <= mol.GetNumHeavyAtoms() <= hi:
            continue
        smi = bracket_free(mol)
        if smi is None or smi in seen:
            continue
        seen.add(smi)
        out.append((smi, properties(Chem.MolFromSmiles(smi))))
    return out


def write_dataset(path, prefix, mols):
    with open(path, "w", encoding="utf-8") as f:
        for i, (smi, props) in enumerate(mols):
            f.write(json.dumps({"id": f"{prefix}{i:04d}", "smiles": smi, "properties": props}) + "\n")


CORPUS = [
    "C", "CC", "CCO", "CC(=O)O", "C1CCCCC1", "c1ccccc1", "C1=CC=CC=C1", "CC(C)(C)C", "C#N", "C=C=C",
    "ClCBr", "OC(=O)C(Cl)(Br)I", "c1ccncc1", "c1ccoc1", "c1ccsc1", "C1CC1", "C1CC2CC1C2", "C12CC1C2",
    "c1ccc2ccccc2c1", "c1ccc2c(c1)ccc1ccccc12", "C1CC%10CC1C%10", "C%11CC%11", "N1CCN(CC1)C",
    "O=C1CCCN1", "CC(C)CC(=O)N", "C1CCC2(CC1)CCCC2", "C1CC2CCC1CC2", "FC(F)(F)c1ccccc1",
    "CC1=CC(=O)C=CC1=O", "C1=CC2=CC=CC=CC2=C1", "P(=O)(O)(O)O", "B(O)O", "S(=O)(=O)(N)c1ccccc1",
    "CC(=O)Oc1ccccc1C(=O)O", "CN1C=NC2=C1C(=O)N(C)C(=O)N2C", "c1ccc2c(c1)oc1ccccc12",
    "C1CCC(CC1)C1CCCCC1", "C1CCCCCCCCCCC1", "C-C=C#C", "C:C", "C(C(C(C)C)C)C", "OCC(O)CO",
    "C1OC1", "c1cc2ccc3cccc4ccc(c1)c2c34", "C1CC2CC3CC1CC(C2)C3", "N#CC#N", "CC(C)(O)C#CC",
    "C1=CCC=CC1", "c1ncncn1", "C1CN2CCN1CC2",
]

REJECTIONS = [
    ("C[C@H](O)N", "UnsupportedFeature", 1),
    ("C/C=C/C", "UnsupportedFeature", 1),
    ("F\\C=C\\F", "UnsupportedFeature", 1),
    ("CC@", "UnsupportedFeature", 2),
    ("CC(=O)[O-]", "UnsupportedFeature", 6),
    ("[NH4+]", "UnsupportedFeature", 0),
    ("CCN+", "UnsupportedFeature", 3),
    ("CCO.CC", "UnsupportedFeature", 3),
    ("N[C@@H](C)C(=O)O", "UnsupportedFeature", 1),
    ("C1CC[C@H]1", "UnsupportedFeature", 4),
    ("c1ccc[nH]1", "UnsupportedFeature", 5),
    ("CC*", "UnsupportedFeature", 2),
]


def corpus_entry(smi):
    mol = Chem.MolFromSmiles(smi, sanitize=False)
    mol.UpdatePropertyCache(strict=False)
    Chem.FastFindRings(mol)
    rings = sorted(len(r) for r in Chem.GetSSSR(mol))
    return {"smiles": smi, "nodes": mol.GetNumAtoms(), "edges": mol.GetNumBonds(), "rings": rings}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "data")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write_dataset(args.out / "fixture64.jsonl", "f", molecules(7, 64, 8, 18))
    write_dataset(args.out / "fixture200.jsonl", "m", molecules(11, 200, 8, 18))
    with open(args.out / "smiles_corpus.jsonl", "w", encoding="utf-8") as f:
        for smi in CORPUS:
            f.write(json.dumps(corpus_entry(smi)) + "\n")
    with open(args.out / "smiles_rejections.jsonl", "w", encoding="utf-8") as f:
        for smi, kind, offset in REJECTIONS:
            assert smi[offset] in "@/\\[]+-.*", (smi, offset)
            f.write(json.dumps({"smiles": smi, "kind": kind, "offset": offset}) + "\n")


if __name__ == "__main__":
    main()
