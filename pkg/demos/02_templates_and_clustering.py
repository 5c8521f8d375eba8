"""From mined sentences to representative prompt templates.

Masks every entity mention with a typed slot marker, embeds the masked
sentences through the (mock) gateway, clusters them with PAM k-medoids, and
keeps each cluster's medoid as that cluster's representative prompt.
"""

from pathlib import Path

from litaug import Matcher, MockGateway, k_medoids, load_corpus, load_vocabulary, mine_candidates
from litaug.templates import dedupe_templates, embed_batch, extract_templates, mask_sentence, unmask

FIXTURES = Path(__file__).parent.parent / "fixtures"

vocab = load_vocabulary(FIXTURES / "vocab.tsv")
mined = mine_candidates(load_corpus(FIXTURES / "corpus.jsonl"), Matcher(vocab))

# -- 1. masking ----------------------------------------------------------------

template = mask_sentence(mined[0])
print("original :", mined[0].text)
print("masked   :", template.text_with_slots)
surfaces = [m.surface for m in sorted(mined[0].mentions, key=lambda m: m.start)]
assert unmask(template, surfaces) == mined[0].text
print("unmasking with the original surfaces reproduces the sentence exactly")

masked = dedupe_templates(mask_sentence(m) for m in mined)
print(f"\n{len(mined)} mined sentences -> {len(masked)} unique masked templates")

# -- 2. embedding + k-medoids ---------------------------------------------------

gateway = MockGateway(seed=7, embedding_dim=24)
embeddings = embed_batch(gateway, masked)
print(f"embeddings: {embeddings.shape}")

clustering = k_medoids(embeddings, k=6)
print(f"\nPAM cost trace (BUILD, then each accepted swap): "
      f"{[round(c, 2) for c in clustering.cost_trace]}")
print(f"final cost {clustering.total_cost:.2f}; medoid indices {clustering.medoid_indices}")

sizes = [clustering.assignment.count(c) for c in range(clustering.k)]
print(f"cluster sizes: {sizes}")

# -- 3. medoid templates ----------------------------------------------------------

templates = extract_templates(clustering, masked, iteration=1)
print("\nrepresentative prompts (one per cluster):")
for t in templates:
    print(f"  [{t.source.cluster_id}] {t.text_with_slots[:90]}")
