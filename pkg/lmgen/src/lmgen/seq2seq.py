"""Optional encoder-decoder backend (requires the "seq2seq" extra).

The model conditions on "[input] [prompt]" with ``soft_tokens`` learned
prefix vectors prepended to the encoder input, then decodes the candidate
string. Decoding settings are plain flags (see cli.py) with library
defaults; nothing here is required for stub-mode operation or for the
contract tests.
"""

from dataclasses import dataclass


class ModelLoadError(RuntimeError):
    pass


@dataclass
class Seq2SeqModel:
    checkpoint: str
    beam_size: int = 1
    max_length: int = 128

    def __post_init__(self):
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                "seq2seq mode needs the optional dependencies: "
                "pip install 'lmgen[seq2seq]'"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(self.checkpoint)
            self._model = AutoModelForSeq2SeqLM.from_pretrained(self.checkpoint)
        except Exception as exc:
            raise ModelLoadError(f"cannot load checkpoint {self.checkpoint!r}: {exc}") from exc
        self._model.eval()

    def generate(self, input_text: str, prompt_text: str, soft_tokens: int = 20) -> str:
        if not input_text:
            return ""
        import torch

        text = f"{input_text} {prompt_text}".strip()
        encoded = self._tokenizer(text, return_tensors="pt", truncation=True)
        embedder = self._model.get_input_embeddings()
        inputs_embeds = embedder(encoded["input_ids"])
        if soft_tokens:
            # learned prefix vectors are stored alongside the checkpoint; a
            # checkpoint without them falls back to a zero prefix
            prefix = getattr(self._model, "soft_prefix", None)
            if prefix is None:
                prefix = torch.zeros(1, soft_tokens, inputs_embeds.shape[-1])
            inputs_embeds = torch.cat([prefix[:, :soft_tokens], inputs_embeds], dim=1)
        with torch.no_grad():
            out = self._model.generate(
                inputs_embeds=inputs_embeds,
                num_beams=self.beam_size,
                max_length=self.max_length,
            )
        return self._tokenizer.decode(out[0], skip_special_tokens=True)
