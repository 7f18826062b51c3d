#!/usr/bin/env python3
"""Fill-mask adapter bridging Hugging Face models to the chimera CLI.

Speaks the subprocess backend protocol on stdio, one JSON object per line:

    -> {"ready": true, "cased": false, "suffix_only": false}   (handshake)
    <- {"prompt": "the moon is like a [MASK]", "k": 50}
    -> {"predictions": [["ghost", -2.35], ["balloon", -2.71], ...]}
    <- ...

Scores are natural-log probabilities. Two model families are supported:

* masked LMs (BERT/RoBERTa style): the literal ``[MASK]`` marker in the
  prompt is replaced by the model's own mask token and predictions are read
  at that position (``suffix_only: false``);
* causal LMs (GPT-2 style): the marker must be the final token; the prompt
  prefix is scored for its next word (``suffix_only: true``).

Only single-word vocabulary entries are emitted: word-initial pieces for
RoBERTa/GPT-2 (the ``Ġ`` marker is stripped), non-continuation pieces for
BERT (no ``##``), alphabetic only. Register in the pipeline config as:

    [backends.bert]
    kind = "subprocess"
    command = ["python3", "scripts/hf_backend.py", "--model", "bert-base-uncased"]

Usage: hf_backend.py --model NAME [--causal] [--device cpu]
"""

import argparse
import json
import sys

MASK_MARKER = "[MASK]"


def emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def load(model_name, causal, device):
    import torch  # noqa: F401
    from transformers import AutoModelForCausalLM, AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_name)
    cls = AutoModelForCausalLM if causal else AutoModelForMaskedLM
    model = cls.from_pretrained(model_name)
    model.to(device)
    model.eval()
    return tokenizer, model


def single_word_tokens(tokenizer, causal):
    """vocab index -> clean word for ids usable as standalone words."""
    vocab = tokenizer.get_vocab()
    out = {}
    for token, idx in vocab.items():
        if token.startswith("Ġ"):  # byte-BPE word-initial piece
            word = token[1:]
        elif token.startswith("##"):  # WordPiece continuation: never standalone
            continue
        elif causal:
            # GPT-2 pieces without Ġ continue the previous word mid-token
            continue
        else:
            word = token
        if word and word.isalpha():
            out[idx] = word
    return out


def predict(tokenizer, model, word_by_id, causal, cased, prompt, k):
    import torch

    if causal:
        if not prompt.rstrip().endswith(MASK_MARKER):
            return {"error": "causal model needs the mask marker at the end"}
        prefix = prompt.rstrip()[: -len(MASK_MARKER)].rstrip()
        if not prefix:
            return {"error": "empty prefix"}
        inputs = tokenizer(prefix, return_tensors="pt").to(model.device)
        with torch.no_grad():
            logits = model(**inputs).logits[0, -1]
    else:
        if tokenizer.mask_token is None:
            return {"error": "model has no mask token"}
        text = prompt.replace(MASK_MARKER, tokenizer.mask_token)
        inputs = tokenizer(text, return_tensors="pt").to(model.device)
        mask_positions = (
            (inputs["input_ids"][0] == tokenizer.mask_token_id).nonzero().flatten()
        )
        if len(mask_positions) != 1:
            return {"error": f"prompt must contain exactly one mask, found {len(mask_positions)}"}
        with torch.no_grad():
            logits = model(**inputs).logits[0, mask_positions[0]]

    log_probs = torch.log_softmax(logits, dim=-1)
    # rank the whole vocabulary once, then keep the first k clean words
    order = torch.argsort(log_probs, descending=True)
    predictions = []
    seen = set()
    for idx in order.tolist():
        word = word_by_id.get(idx)
        if word is None:
            continue
        if not cased:
            word = word.lower()
        if word in seen:
            continue
        seen.add(word)
        predictions.append([word, float(log_probs[idx])])
        if len(predictions) >= k:
            break
    return {"predictions": predictions}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True)
    parser.add_argument("--causal", action="store_true", help="GPT-2 style next-word model")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--cased", action="store_true", help="preserve case in predictions")
    args = parser.parse_args()

    try:
        tokenizer, model = load(args.model, args.causal, args.device)
        word_by_id = single_word_tokens(tokenizer, args.causal)
    except Exception as e:  # model missing, no torch, no network, ...
        emit({"ready": False, "error": f"{type(e).__name__}: {e}"})
        return 1

    emit({"ready": True, "cased": args.cased, "suffix_only": args.causal})

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            response = predict(
                tokenizer,
                model,
                word_by_id,
                args.causal,
                args.cased,
                request["prompt"],
                int(request["k"]),
            )
        except Exception as e:
            response = {"error": f"{type(e).__name__}: {e}"}
        emit(response)
    return 0


if __name__ == "__main__":
    sys.exit(main())
