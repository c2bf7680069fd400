import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

# wordpiece vocab large enough for the test sentences; everything else
# falls to [UNK], which is fine for shape/contract checks
VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "in", "this", "sentence", "means", "was", "is",
    "apple", "banana", "cherry", "fruit", "news", "game", "team",
    "market", "stock", "price", "word", "one", "two", "three",
    "##s", "##ed", "##ing", ".", ",",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A from-scratch BERT small enough to run in milliseconds."""
    d = tmp_path_factory.mktemp("tinybert")
    (d / "vocab.txt").write_text("\n".join(VOCAB) + "\n")
    tokenizer = BertTokenizer(str(d / "vocab.txt"))
    tokenizer.save_pretrained(str(d))
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    BertModel(config).save_pretrained(str(d))
    return str(d)
