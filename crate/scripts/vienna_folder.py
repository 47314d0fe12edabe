#!/usr/bin/env python3
"""External folder for `--engine external`, backed by the ViennaRNA Python
bindings with the Turner 1999 parameter set.

Reads `FOLD <sequence> <target>` lines on stdin and answers each with
`OK <mfe-structure> <mfe-energy> <ensemble-free-energy> <target-prob>
<ensemble-defect>` or `ERR <message>`.

    montparnasse batch --engine external \
        --external-cmd "python3 scripts/vienna_folder.py" ...
"""

import sys

try:
    import RNA
except ImportError:
    sys.stderr.write("ViennaRNA Python bindings (module RNA) are not installed\n")
    sys.exit(2)

RNA.params_load_RNA_Turner1999()


def fold(sequence, target):
    fc = RNA.fold_compound(sequence)
    structure, mfe = fc.mfe()
    fc.exp_params_rescale(mfe)
    _, ensemble = fc.pf()
    probability = fc.pr_structure(target)
    defect = fc.ensemble_defect(target) * len(sequence)
    return f"OK {structure} {mfe} {ensemble} {probability} {defect}"


def main():
    for line in sys.stdin:
        parts = line.split()
        if len(parts) != 3 or parts[0] != "FOLD" or len(parts[1]) != len(parts[2]):
            reply = f"ERR bad request {line.strip()!r}"
        else:
            try:
                reply = fold(parts[1], parts[2])
            except Exception as exc:  # report and keep serving
                reply = f"ERR {exc}"
        sys.stdout.write(reply + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
