import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

WORDS = [
    "the", "cat", "sat", "on", "mat", "dog", "ran", "and",
    "a", "big", "red", "blue",
]


@pytest.fixture(scope="session")
def tiny_tokenizer():
    vocab = {w: i for i, w in enumerate(WORDS)}
    vocab["unknown"] = len(vocab)  # unk kept round-trippable on purpose
    vocab["<eos>"] = len(vocab)
    tok = Tokenizer(WordLevel(vocab, unk_token="unknown"))
    tok.pre_tokenizer = Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=tok, eos_token="<eos>", unk_token="unknown"
    )


@pytest.fixture(scope="session")
def tiny_model(tiny_tokenizer):
    torch.manual_seed(1234)
    config = GPT2Config(
        vocab_size=tiny_tokenizer.vocab_size,
        n_positions=128,
        n_embd=32,
        n_layer=4,
        n_head=4,
        eos_token_id=tiny_tokenizer.eos_token_id,
        bos_token_id=tiny_tokenizer.eos_token_id,
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    return model


@pytest.fixture(scope="session")
def saved_model_dir(tmp_path_factory, tiny_model, tiny_tokenizer):
    path = tmp_path_factory.mktemp("tiny-model")
    tiny_model.save_pretrained(path)
    tiny_tokenizer.save_pretrained(path)
    return path
