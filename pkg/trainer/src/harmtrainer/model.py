"""A compact transformer encoder for binary text classification.

Stock torch layers end to end; dropout is zero so a seeded run is
bit-reproducible on CPU. Mean pooling over real (non-pad) positions
feeds a linear head with two logits.
"""

import torch
from torch import nn

from harmtrainer.data import PAD_ID


class CompactClassifier(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        max_len: int,
        dim: int = 64,
        layers: int = 2,
        heads: int = 4,
    ):
        super().__init__()
        self.token_emb = nn.Embedding(vocab_size, dim, padding_idx=PAD_ID)
        self.pos_emb = nn.Embedding(max_len, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=heads,
            dim_feedforward=dim * 2,
            dropout=0.0,
            batch_first=True,
        )
        # the nested-tensor inference fast path is still in flux upstream;
        # keep eval on the same code path as training
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(dim, 2)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        pad_mask = ids.eq(PAD_ID)
        positions = torch.arange(ids.size(1), device=ids.device)
        x = self.token_emb(ids) + self.pos_emb(positions)
        x = self.encoder(x, src_key_padding_mask=pad_mask)
        real = (~pad_mask).unsqueeze(-1).to(x.dtype)
        pooled = (x * real).sum(dim=1) / real.sum(dim=1).clamp(min=1.0)
        return self.head(pooled)
