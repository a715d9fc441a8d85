"""Exercise the HTTP scoring service without leaving the process.

Trains a throwaway model, mounts the app on a test client, and walks the
endpoints a browser front end would use, including the failure shapes.
"""

import pathlib
import tempfile

from fastapi.testclient import TestClient

from adscreen.corpus import SyntheticCorpusSpec, generate_synthetic_corpus
from adscreen.pipeline import PipelineConfig, run_pipeline
from adscreen.service import create_app

work = pathlib.Path(tempfile.mkdtemp(prefix="adscreen_service_"))
corpus = work / "corpus"
generate_synthetic_corpus(SyntheticCorpusSpec.standard(docs_per_class=25, seed=3), corpus)
run_pipeline(
    PipelineConfig(pipeline=2, vec_size=16, doc2vec_epochs=8),
    corpus,
    corpus / "metadata.json",
    out_dir=work / "model",
    stability=False,
)

client = TestClient(create_app(str(work / "model" / "model.json")))

print("GET /api/v1/health")
print(" ", client.get("/api/v1/health").json())

print("\nGET /api/v1/model")
info = client.get("/api/v1/model").json()
print(" ", {k: info[k] for k in ("version", "pipeline")})

print("\nPOST /api/v1/score with a real description")
resp = client.post("/api/v1/score", json={
    "description_text": "the mother is drying dishes while the sink runs over "
                        "and the boy reaches into the cookie jar",
    "age": 71,
    "gender": "female",
    "speaking_duration": 58,
})
body = resp.json()
print(f"  {resp.status_code}: probability {body['probability']:.3f}, "
      f"band {body['risk_band']}")
print(f"  disclaimer: {body['disclaimer']}")

print("\nPOST with empty text (client bugs happen)")
resp = client.post("/api/v1/score", json={
    "description_text": "   ",
    "age": 71,
    "gender": "female",
    "speaking_duration": 58,
})
print(f"  {resp.status_code}: {resp.json()['detail']}")

print("\nPOST against a service with no model loaded")
bare = TestClient(create_app())
resp = bare.post("/api/v1/score", json={
    "description_text": "a picture of a kitchen",
    "age": 70,
    "gender": "male",
    "speaking_duration": 60,
})
print(f"  {resp.status_code}: {resp.json()['detail']}")
