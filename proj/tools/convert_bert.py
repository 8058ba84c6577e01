#!/usr/bin/env python3
"""Convert a Hugging Face BERT encoder into a relex encoder-weights file.

    python tools/convert_bert.py bert-large-uncased out/bert.bin --vocab-out out/vocab.txt

The output holds the "encoder.*" tensors in float64 plus the encoder config in
the header. Only the encoder is converted; the pooler is dropped.
"""

import argparse
import json
import struct

import numpy as np

MAGIC = b"RELEXCK1"

_LAYER_MAP = {
    "attention.self.query": "attention.query",
    "attention.self.key": "attention.key",
    "attention.self.value": "attention.value",
    "attention.output.dense": "attention.output",
    "intermediate.dense": "ffn.intermediate",
    "output.dense": "ffn.output",
}
_LAYER_NORMS = {"attention.output.LayerNorm": "attention.ln", "output.LayerNorm": "ffn.ln"}


def encoder_tensors(state, layers):
    """Maps a BertModel state dict onto relex parameter names (in model order)."""

    def get(name):
        for prefix in ("", "bert."):
            if prefix + name in state:
                return state[prefix + name].detach().double().cpu().numpy()
        raise KeyError(name)

    def row(v):
        return v.reshape(1, -1)

    out = [
        ("encoder.embeddings.word", get("embeddings.word_embeddings.weight")),
        ("encoder.embeddings.position", get("embeddings.position_embeddings.weight")),
        ("encoder.embeddings.token_type", get("embeddings.token_type_embeddings.weight")),
        ("encoder.embeddings.ln.gamma", row(get("embeddings.LayerNorm.weight"))),
        ("encoder.embeddings.ln.beta", row(get("embeddings.LayerNorm.bias"))),
    ]
    for l in range(layers):
        src, dst = f"encoder.layer.{l}.", f"encoder.layer.{l}."
        for hf, ours in _LAYER_MAP.items():
            out.append((dst + ours + ".weight", get(src + hf + ".weight")))
            out.append((dst + ours + ".bias", row(get(src + hf + ".bias"))))
            if hf in ("attention.output.dense", "output.dense"):
                ln = "attention.output.LayerNorm" if hf == "attention.output.dense" else "output.LayerNorm"
                out.append((dst + _LAYER_NORMS[ln] + ".gamma", row(get(src + ln + ".weight"))))
                out.append((dst + _LAYER_NORMS[ln] + ".beta", row(get(src + ln + ".bias"))))
    return out


def encoder_config(hf_config):
    if getattr(hf_config, "hidden_act", "gelu") != "gelu":
        raise ValueError(f"unsupported activation {hf_config.hidden_act!r}; the encoder uses erf GELU")
    return {
        "variant": "pretrained-bidirectional-transformer",
        "hidden_dim": hf_config.hidden_size,
        "layers": hf_config.num_hidden_layers,
        "heads": hf_config.num_attention_heads,
        "intermediate_dim": hf_config.intermediate_size,
        "max_positions": hf_config.max_position_embeddings,
        "type_vocab_size": hf_config.type_vocab_size,
        "layer_norm_eps": hf_config.layer_norm_eps,
        "init_range": hf_config.initializer_range,
    }


def write_encoder_weights(path, config, tensors):
    directory, offset = [], 0
    for name, m in tensors:
        directory.append({"name": name, "rows": int(m.shape[0]), "cols": int(m.shape[1]), "offset": offset})
        offset += m.size * 8
    header = json.dumps(
        {"kind": "encoder-weights", "config": config, "format": "relex-checkpoint", "version": 1, "tensors": directory}
    ).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for _, m in tensors:
            f.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def convert(model, path):
    config = encoder_config(model.config)
    write_encoder_weights(path, config, encoder_tensors(model.state_dict(), config["layers"]))
    return config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model", help="Hugging Face model name or local directory")
    ap.add_argument("output", help="encoder-weights file to write")
    ap.add_argument("--vocab-out", help="also write the WordPiece vocabulary here")
    args = ap.parse_args()

    from transformers import AutoTokenizer, BertModel

    model = BertModel.from_pretrained(args.model)
    config = convert(model, args.output)
    print(f"wrote {args.output}: {config['layers']} layers, hidden {config['hidden_dim']}")
    if args.vocab_out:
        tok = AutoTokenizer.from_pretrained(args.model)
        vocab = sorted(tok.get_vocab().items(), key=lambda kv: kv[1])
        with open(args.vocab_out, "w", encoding="utf-8") as f:
            f.writelines(t + "\n" for t, _ in vocab)
        print(f"wrote {args.vocab_out}: {len(vocab)} entries")


if __name__ == "__main__":
    main()
