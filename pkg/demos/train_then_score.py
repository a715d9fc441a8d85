"""Train one pipeline end to end, then score a brand-new transcript.

Small dimensions keep this to roughly half a minute; the defaults in
PipelineConfig are the full-study settings and take far longer.
"""

import pathlib
import tempfile

from adscreen.chat import RawChatDocument, TranscriptMeta, parse_chat
from adscreen.container import load_container, score_transcript
from adscreen.corpus import SyntheticCorpusSpec, generate_synthetic_corpus
from adscreen.pipeline import PipelineConfig, run_pipeline

work = pathlib.Path(tempfile.mkdtemp(prefix="adscreen_train_"))
corpus_dir = work / "corpus"
artifact_dir = work / "artifacts"

generate_synthetic_corpus(SyntheticCorpusSpec.standard(docs_per_class=30, seed=5), corpus_dir)

cfg = PipelineConfig(
    pipeline=2,            # token counts plus learned document vectors
    seed=0,
    repetitions=5,
    vec_size=16,
    doc2vec_epochs=8,
)
report = run_pipeline(cfg, corpus_dir, corpus_dir / "metadata.json", out_dir=artifact_dir)

print("single-split results:")
print(f"  accuracy {report['test']['accuracy']:.3f}   auc {report['test']['auc']:.3f}")
print(f"  selected ridge strength c = {report['selected_c']}")
stab = report["stability"]
print(f"  over {stab['repetitions']} resplits: "
      f"accuracy {stab['accuracy']['mean']:.3f} +- {stab['accuracy']['std']:.3f}")

print(f"\nartifacts in {artifact_dir}:")
for p in sorted(artifact_dir.iterdir()):
    print(f"  {p.name}")

# score a transcript the training corpus has never seen; the timing and
# demographic features need the speaker's details alongside the text
container = load_container(artifact_dir / "model.json")
fresh = parse_chat(
    RawChatDocument.from_text(
        "*PAR:\tthe mother is drying dishes by the sink .\n"
        "*PAR:\tthe water is running onto the floor .\n"
        "*PAR:\tthe boy hands a cookie to his sister .\n",
        source_id="fresh",
    ),
    meta=TranscriptMeta(id="fresh", age=68, gender="female", audio_length_seconds=55.0),
)
p = score_transcript(container, fresh)
print(f"\nscreening probability for the new description: {p:.3f}")
print(f"model version: {container.version}")
