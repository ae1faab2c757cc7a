"""Regenerates tests/fixtures/bpe_small.json and bpe_expected.json.

Trains a small byte-level BPE with the Hugging Face `tokenizers` package and
records its encodings of a few sentences, which the C++ tests compare
against.
"""
import json
import pathlib

from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers

HERE = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

TRAIN = [
    "The quick brown fox jumps over the lazy dog.",
    "Instruction tuning data should be diverse, not just large.",
    "Tokens that appear between 10 and 500 times are important tokens!",
    "Don't panic: we'll sample 7 subsets, they're all fixed-size.",
    "naïve café résumé – über straße 東京 😀 emoji",
    "   leading spaces and\ttabs\nand newlines  ",
    "numbers 12345 and 3.14159 and -42",
] * 20

SENTENCES = [
    "The quick brown fox.",
    "Don't overthink it; they'll sample 42 items!",
    "naïve café 東京 😀",
    "  two  spaces\tand tab\n",
    "unseenwordxyz QQQ",
    "",
]


def main() -> None:
    tok = Tokenizer(models.BPE())
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=400,
        min_frequency=2,
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        show_progress=False,
    )
    tok.train_from_iterator(TRAIN, trainer)
    HERE.mkdir(parents=True, exist_ok=True)
    tok.save(str(HERE / "bpe_small.json"))
    expected = []
    for s in SENTENCES:
        enc = tok.encode(s)
        expected.append({"text": s, "ids": enc.ids, "tokens": enc.tokens})
    (HERE / "bpe_expected.json").write_text(json.dumps(expected, ensure_ascii=False, indent=1) + "\n")


if __name__ == "__main__":
    main()
