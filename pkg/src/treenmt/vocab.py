"""Token/id vocabularies with reserved unk and eos entries."""
from collections import Counter

UNK_TOKEN = "unk"
EOS_TOKEN = "eos"
RESERVED = (UNK_TOKEN, EOS_TOKEN)


class Vocab:
    """Bijective token<->id map; ids 0 and 1 are unk and eos."""

    def __init__(self, tokens):
        if list(tokens[:2]) != list(RESERVED):
            raise ValueError(f"vocab must start with reserved tokens {RESERVED}")
        self.tokens = list(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    unk_id = 0
    eos_id = 1

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def id_of(self, token):
        return self.index.get(token, self.unk_id)

    def token_of(self, idx):
        return self.tokens[idx]

    def encode(self, tokens):
        """Map tokens to ids (unknowns to unk) and append a single eos id."""
        ids = [self.index.get(t, self.unk_id) for t in tokens]
        ids.append(self.eos_id)
        return ids

    def decode(self, ids, strip_eos=True):
        toks = [self.tokens[i] for i in ids]
        if strip_eos:
            toks = [t for t in toks if t != EOS_TOKEN]
        return toks

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(tokens)


def build_vocab(sentences, min_count):
    """Vocabulary of all tokens seen at least min_count times.

    Ids are assigned by descending count, ties broken lexicographically, so
    the result is deterministic for a given corpus.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    total = 0
    for sent in sentences:
        total += 1
        counts.update(sent)
    if total == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = [
        tok
        for tok, cnt in counts.items()
        if cnt >= min_count and tok not in RESERVED
    ]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocab(list(RESERVED) + kept)
