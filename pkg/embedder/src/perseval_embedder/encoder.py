"""Model-facing layer: contextual embeddings and masked-token
distributions from pretrained transformer checkpoints.

Everything runs in inference mode on the requested device (CPU by
default) with the model in eval state, so outputs are deterministic for
fixed weights and inputs.
"""
from __future__ import annotations

import warnings

import numpy as np
import torch

from .errors import ExportError, ModelLoadError

_SANE_LENGTH_CAP = 1_000_000


def _quiet_transformers():
    """Silence checkpoint load reports and progress bars; a headless
    exporter has no use for either."""
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()


def _load_tokenizer(model_name: str):
    from transformers import AutoTokenizer

    try:
        return AutoTokenizer.from_pretrained(model_name)
    except Exception as exc:
        raise ModelLoadError(
            f"could not load tokenizer for {model_name!r}: {exc}") from exc


def _context_limit(tokenizer, model) -> int | None:
    """Longest input the pair can handle, or None when unbounded."""
    candidates = []
    declared = getattr(tokenizer, "model_max_length", None)
    if declared and declared < _SANE_LENGTH_CAP:
        candidates.append(int(declared))
    positions = getattr(model.config, "max_position_embeddings", None)
    if positions and positions < _SANE_LENGTH_CAP:
        candidates.append(int(positions))
    return min(candidates) if candidates else None


def _forward(model, inputs: dict):
    try:
        with torch.no_grad():
            return model(**inputs)
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise ExportError(
                "ran out of memory during inference; rerun with a "
                "smaller --batch-size") from exc
        raise


class _Backend:
    """Shared tokenizer handling for both export modes."""

    def __init__(self, model_name: str, device: str, batch_size: int):
        _quiet_transformers()
        if batch_size < 1:
            raise ValueError("batch size must be at least 1")
        self.model_name = model_name
        self.device = torch.device(device)
        self.batch_size = batch_size
        self.tokenizer = _load_tokenizer(model_name)

    def _finish_load(self, model):
        model.eval()
        model.to(self.device)
        self.model = model
        self.context_limit = _context_limit(self.tokenizer, model)

    def _warn_if_truncating(self, text: str):
        if self.context_limit is None:
            return
        length = len(self.tokenizer(text)["input_ids"])
        if length > self.context_limit:
            warnings.warn(
                f"text of {length} tokens exceeds the model context "
                f"({self.context_limit}); truncating", stacklevel=3)

    def _encode(self, texts: list[str]) -> dict:
        encoded = self.tokenizer(
            texts, padding=True, truncation=self.context_limit is not None,
            max_length=self.context_limit,
            return_special_tokens_mask=True, return_tensors="pt",
        )
        return {k: v.to(self.device) for k, v in encoded.items()}


class TextEncoder(_Backend):
    """Per-token contextual embeddings from an encoder checkpoint."""

    def __init__(self, model_name: str, device: str = "cpu",
                 batch_size: int = 8):
        super().__init__(model_name, device, batch_size)
        from transformers import AutoModel

        try:
            try:
                model = AutoModel.from_pretrained(
                    model_name, add_pooling_layer=False)
            except TypeError:
                model = AutoModel.from_pretrained(model_name)
        except ModelLoadError:
            raise
        except Exception as exc:
            raise ModelLoadError(
                f"could not load encoder {model_name!r}: {exc}") from exc
        self._finish_load(model)

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        """One (content_tokens, hidden) float64 matrix per text;
        special tokens and padding are dropped."""
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            for text in batch:
                self._warn_if_truncating(text)
            encoded = self._encode(batch)
            special = encoded.pop("special_tokens_mask")
            hidden = _forward(self.model, encoded).last_hidden_state
            attention = encoded["attention_mask"]
            for row in range(len(batch)):
                keep = (attention[row] == 1) & (special[row] == 0)
                out.append(
                    hidden[row][keep].cpu().numpy().astype(np.float64))
        return out


class MaskedDistributionModel(_Backend):
    """Vocabulary distributions at masked positions of a masked-LM."""

    def __init__(self, model_name: str, device: str = "cpu",
                 batch_size: int = 8):
        super().__init__(model_name, device, batch_size)
        from transformers import AutoModelForMaskedLM

        if self.tokenizer.mask_token_id is None:
            raise ModelLoadError(
                f"{model_name!r} has no mask token; this mode needs a "
                f"masked language model")
        try:
            model = AutoModelForMaskedLM.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadError(
                f"could not load masked LM {model_name!r}: {exc}") from exc
        self._finish_load(model)

    @property
    def vocab_size(self) -> int:
        return int(self.model.config.vocab_size)

    def masked_rows(self, text: str) -> tuple[list[int], np.ndarray]:
        """Token ids of the text's content positions, and one vocabulary
        distribution per position obtained by masking that position."""
        self._warn_if_truncating(text)
        encoded = self._encode([text])
        special = encoded.pop("special_tokens_mask")[0]
        input_ids = encoded["input_ids"][0]
        positions = torch.nonzero(special == 0).flatten().tolist()
        if not positions:
            raise ExportError(
                f"text {text[:40]!r} has no content tokens to mask")
        token_ids = [int(input_ids[p]) for p in positions]
        rows = np.empty((len(positions), self.vocab_size), dtype=np.float64)
        mask_id = self.tokenizer.mask_token_id
        for start in range(0, len(positions), self.batch_size):
            chunk = positions[start:start + self.batch_size]
            inputs = {k: v.repeat(len(chunk), *([1] * (v.dim() - 1)))
                      for k, v in encoded.items()}
            for i, pos in enumerate(chunk):
                inputs["input_ids"][i, pos] = mask_id
            logits = _forward(self.model, inputs).logits
            for i, pos in enumerate(chunk):
                probs = torch.softmax(logits[i, pos, :].double(), dim=-1)
                rows[start + i] = probs.cpu().numpy()
        return token_ids, rows
