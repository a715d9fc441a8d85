"""Generate a small synthetic screening corpus and look inside it.

Two generator channels separate the classes: which words get picked, and
how orderly the description moves through the scene.  The null variant
turns both off, which is how the experiment suite checks that no pipeline
invents signal out of noise.
"""

import json
import pathlib
import tempfile

from adscreen.chat import load_corpus
from adscreen.corpus import SyntheticCorpusSpec, generate_synthetic_corpus

out = pathlib.Path(tempfile.mkdtemp(prefix="adscreen_corpus_"))

spec = SyntheticCorpusSpec.standard(docs_per_class=10, seed=7)
generate_synthetic_corpus(spec, out)

files = sorted(out.glob("*.cha"))
print(f"wrote {len(files)} transcripts to {out}")

print("\nfirst transcript on disk:")
print(files[0].read_text())

meta = json.loads((out / "metadata.json").read_text())
print("first two metadata rows:")
for row in meta[:2]:
    print(" ", row)

transcripts = load_corpus(out, out / "metadata.json")
by_label = {}
for t in transcripts:
    by_label.setdefault(t.label.value, 0)
    by_label[t.label.value] += 1
print(f"\nparsed back: {len(transcripts)} transcripts, labels {by_label}")
