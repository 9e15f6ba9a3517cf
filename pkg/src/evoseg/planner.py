"""Analytic architecture planner: layer graph, shapes, parameters, FLOPs.

The planner expands a genotype into an explicit encoder/bottleneck/decoder
layer plan over a fixed 128×128×1 input and counts parameters and FLOPs per
layer. It never executes tensors; the counts drive resource-aware fitness and
feasibility checks.

Counting conventions (1 MAC = 2 FLOPs throughout; bias parameters counted,
bias FLOPs excluded):

- conv: params k²·c_in·c_out + c_out; flops 2·k²·c_in·c_out·H_out·W_out.
- downsample: 2×2 max pool; 3 comparisons per output element.
- upsample: 2× nearest neighbour; 0 params, 0 flops.
- activation: per-element costs ACTIVATION_FLOP_COSTS.
- dropout: identity at inference; 0 params, 0 flops.
- fusion: add N·C; weighted_sum 2 params and 3·N·C; concat 0 (copy).
- residual_scale: α·x + (1−α)·skip; 3·N·C.
- squeeze_excitation: global pool → dense c→c/r → relu → dense c/r→c →
  sigmoid → channel scale.
- self_attention: 1×1 q/k/v projections (d_qk = c//8, d_v = c//4), N×N
  attention with softmax, output projection back to c.

Block recipe (fixed planner policy, not genes):

- Encoder stage i (channels f_l·2^(i-1)): convs_per_block convs of kernel k_n
  with activation each, dropout, attention block, 2× downsample.
  squeeze_excitation appears at every encoder stage; self_attention only at
  the deepest encoder stage (its quadratic cost is bounded by restricting it
  to the two deepest resolutions — there and the bottleneck).
- Bottleneck (at 128/2^n_s): 1×1 reduction conv to half the deepest encoder
  width, parallel dilated k_n×k_n convs (rates ``dilation_rates``) over the
  reduced features, summed by a fixed add aggregation, activation, then
  self-attention when that gene is selected.
- Decoder stage j: 2× nearest-neighbour upsample + 3×3 conv to the matching
  skip width s_j, gene-selected fusion with the skip, residual scaling, then
  convs_per_block convs of kernel k_n narrowing to s_j//2. Concat fusion
  doubles channels; a 1×1 side-branch conv projects the skip to the fused
  width so residual scaling stays shape-consistent.
- Output: 1×1 conv to ``num_classes`` channels + softmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .space import Genotype

Shape = Tuple[int, int, int]  # (height, width, channels)

#: Per-element FLOP cost of each activation kind.
ACTIVATION_FLOP_COSTS: Dict[str, int] = {
    "relu": 1,
    "elu": 3,
    "tanh": 4,
    "sigmoid": 3,
    "softmax": 5,
}

LAYER_KINDS = (
    "conv",
    "downsample",
    "upsample",
    "attention",
    "fusion",
    "dropout",
    "activation",
    "residual_scale",
    "output_conv",
)


class PlannerError(ValueError):
    """Raised when a genotype cannot be expanded into a consistent plan."""


@dataclass(frozen=True)
class PlannerConfig:
    """Fixed expansion policy; these are planner constants, not genes."""

    input_shape: Shape = (128, 128, 1)
    num_classes: int = 4
    convs_per_block: int = 2
    dilation_rates: Tuple[int, ...] = (1, 2, 4)
    se_reduction: int = 4

    def __post_init__(self) -> None:
        if self.convs_per_block not in (1, 2):
            raise ValueError(f"convs_per_block must be 1 or 2, got {self.convs_per_block}")
        if not self.dilation_rates:
            raise ValueError("dilation_rates must be nonempty")
        if self.se_reduction < 1:
            raise ValueError(f"se_reduction must be ≥ 1, got {self.se_reduction}")
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be ≥ 1, got {self.num_classes}")


DEFAULT_PLANNER_CONFIG = PlannerConfig()


@dataclass(frozen=True)
class LayerSpec:
    """One resolved layer with its shapes and exact counts."""

    kind: str
    input_shape: Shape
    output_shape: Shape
    kernel: Optional[int]
    channels_in: int
    channels_out: int
    dilation: Optional[int]
    param_count: int
    flop_count: int
    stage_index: int
    note: str = ""

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind: {self.kind}")
        if self.param_count < 0 or self.flop_count < 0:
            raise ValueError("negative layer count")


@dataclass(frozen=True)
class ArchitecturePlan:
    """Ordered layer list with totals; immutable once built."""

    input_shape: Shape
    layers: Tuple[LayerSpec, ...]
    total_params: int
    total_flops: int

    @property
    def output_shape(self) -> Shape:
        return self.layers[-1].output_shape


@dataclass(frozen=True)
class ResourceBudget:
    """Inclusive upper bounds; None means unlimited."""

    max_params: Optional[int] = None
    max_flops: Optional[int] = None


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    excess_params: int = 0
    excess_flops: int = 0

    @property
    def detail(self) -> str:
        if self.feasible:
            return "feasible"
        parts = []
        if self.excess_params:
            parts.append(f"params over budget by {self.excess_params}")
        if self.excess_flops:
            parts.append(f"flops over budget by {self.excess_flops}")
        return "; ".join(parts)


def _conv_params(kernel: int, c_in: int, c_out: int) -> int:
    return kernel * kernel * c_in * c_out + c_out

def _conv_flops(kernel: int, c_in: int, c_out: int, h_out: int, w_out: int) -> int:
    return 2 * kernel * kernel * c_in * c_out * h_out * w_out


class _PlanBuilder:
    """Accumulates layers while tracking the main-path shape."""

    def __init__(self, input_shape: Shape):
        self.layers: List[LayerSpec] = []
        self.shape: Shape = input_shape

    def add(
        self,
        kind: str,
        output_shape: Shape,
        *,
        kernel: Optional[int] = None,
        dilation: Optional[int] = None,
        params: int = 0,
        flops: int = 0,
        stage: int = 0,
        note: str = "",
        input_shape: Optional[Shape] = None,
        side_branch: bool = False,
    ) -> None:
        in_shape = self.shape if input_shape is None else input_shape
        self.layers.append(
            LayerSpec(
                kind=kind,
                input_shape=in_shape,
                output_shape=output_shape,
                kernel=kernel,
                channels_in=in_shape[2],
                channels_out=output_shape[2],
                dilation=dilation,
                param_count=params,
                flop_count=flops,
                stage_index=stage,
                note=note,
            )
        )
        if not side_branch:
            self.shape = output_shape

    def conv(
        self,
        kernel: int,
        c_out: int,
        *,
        stage: int,
        dilation: Optional[int] = None,
        note: str = "",
        kind: str = "conv",
        input_shape: Optional[Shape] = None,
        side_branch: bool = False,
    ) -> None:
        in_shape = self.shape if input_shape is None else input_shape
        h, w, c_in = in_shape
        self.add(
            kind,
            (h, w, c_out),
            kernel=kernel,
            dilation=dilation,
            params=_conv_params(kernel, c_in, c_out),
            flops=_conv_flops(kernel, c_in, c_out, h, w),
            stage=stage,
            note=note,
            input_shape=in_shape,
            side_branch=side_branch,
        )

    def activation(self, kind_name: str, *, stage: int, note: str = "") -> None:
        h, w, c = self.shape
        cost = ACTIVATION_FLOP_COSTS[kind_name]
        self.add(
            "activation",
            self.shape,
            flops=cost * h * w * c,
            stage=stage,
            note=note or kind_name,
        )

    def squeeze_excitation(self, reduction: int, *, stage: int) -> None:
        h, w, c = self.shape
        hidden = max(1, c // reduction)
        params = c * hidden + hidden + hidden * c + c
        flops = (
            h * w * c          # global average pool
            + 2 * c * hidden   # dense c→hidden
            + hidden           # relu
            + 2 * hidden * c   # dense hidden→c
            + 3 * c            # sigmoid
            + h * w * c        # channel scale
        )
        self.add(
            "attention",
            self.shape,
            params=params,
            flops=flops,
            stage=stage,
            note=f"squeeze_excitation r={reduction}",
        )

    def self_attention(self, *, stage: int) -> None:
        h, w, c = self.shape
        n = h * w
        d_qk = max(1, c // 8)
        d_v = max(1, c // 4)
        params = 2 * (c * d_qk + d_qk) + (c * d_v + d_v) + (d_v * c + c)
        flops = (
            2 * c * d_qk * n * 2   # q and k projections
            + 2 * c * d_v * n      # v projection
            + 2 * n * n * d_qk     # attention logits
            + 3 * n * n            # softmax over keys
            + 2 * n * n * d_v      # attention-weighted values
            + 2 * d_v * c * n      # output projection
        )
        self.add(
            "attention",
            self.shape,
            params=params,
            flops=flops,
            stage=stage,
            note=f"self_attention d_qk={d_qk} d_v={d_v}",
        )


def build_plan(
    genotype: Genotype, cfg: PlannerConfig = DEFAULT_PLANNER_CONFIG
) -> ArchitecturePlan:
    """Expand a genotype into the full layer plan with exact counts."""
    f_l = genotype.filter_base
    kernel = genotype.kernel_size
    n_s = genotype.num_stages
    act = genotype.activation
    height, width, _ = cfg.input_shape

    if height % (2 ** n_s) or width % (2 ** n_s):
        raise PlannerError(
            f"input {height}x{width} not divisible by 2^{n_s}; "
            "downsample chain would break"
        )
    if min(height, width) // (2 ** n_s) < 1:
        raise PlannerError(f"num_stages={n_s} collapses the spatial extent below 1 px")

    builder = _PlanBuilder(cfg.input_shape)
    stage_channels = [f_l * 2 ** i for i in range(n_s)]
    skip_shapes: List[Shape] = []

    # --- encoder ---
    for i, c_out in enumerate(stage_channels, start=1):
        for conv_idx in range(cfg.convs_per_block):
            builder.conv(kernel, c_out, stage=i)
            builder.activation(act, stage=i)
        builder.add(
            "dropout", builder.shape, stage=i, note=f"p={genotype.dropout_rate!r}"
        )
        if genotype.attention == "squeeze_excitation":
            builder.squeeze_excitation(cfg.se_reduction, stage=i)
        elif i == n_s:  # self-attention only at the deepest encoder stage
            builder.self_attention(stage=i)
        skip_shapes.append(builder.shape)
        h, w, c = builder.shape
        builder.add(
            "downsample",
            (h // 2, w // 2, c),
            kernel=2,
            flops=3 * (h // 2) * (w // 2) * c,
            stage=i,
            note="2x2 max pool",
        )

    # --- bottleneck ---
    c_deep = stage_channels[-1]
    c_bottleneck = max(1, c_deep // 2)
    builder.conv(1, c_bottleneck, stage=0, note="bottleneck reduction")
    branch_input = builder.shape
    for rate in cfg.dilation_rates:
        builder.conv(
            kernel,
            c_bottleneck,
            stage=0,
            dilation=rate,
            note=f"dilated branch r={rate}",
            input_shape=branch_input,
            side_branch=True,
        )
    h, w, c = branch_input
    builder.add(
        "fusion",
        branch_input,
        input_shape=branch_input,
        flops=(len(cfg.dilation_rates) - 1) * h * w * c,
        stage=0,
        note=f"sum of {len(cfg.dilation_rates)} dilated branches (fixed add)",
    )
    builder.activation(act, stage=0)
    if genotype.attention == "self_attention":
        builder.self_attention(stage=0)

    # --- decoder ---
    for j in range(1, n_s + 1):
        stage = n_s + j
        skip_shape = skip_shapes[n_s - j]
        s_h, s_w, s_c = skip_shape
        h, w, c = builder.shape
        builder.add("upsample", (h * 2, w * 2, c), stage=stage, note="2x nearest")
        builder.conv(3, s_c, stage=stage, note="post-upsample projection")
        if genotype.fusion == "concat":
            fused_c = 2 * s_c
            builder.conv(
                1,
                fused_c,
                stage=stage,
                note="skip projection for residual scaling",
                input_shape=skip_shape,
                side_branch=True,
            )
            builder.add(
                "fusion",
                (s_h, s_w, fused_c),
                stage=stage,
                note="concat with skip",
            )
        elif genotype.fusion == "weighted_sum":
            fused_c = s_c
            builder.add(
                "fusion",
                (s_h, s_w, fused_c),
                params=2,
                flops=3 * s_h * s_w * fused_c,
                stage=stage,
                note="weighted sum with skip (2 learned weights)",
            )
        else:
            fused_c = s_c
            builder.add(
                "fusion",
                (s_h, s_w, fused_c),
                flops=s_h * s_w * fused_c,
                stage=stage,
                note="add with skip",
            )
        builder.add(
            "residual_scale",
            builder.shape,
            flops=3 * s_h * s_w * fused_c,
            stage=stage,
            note=f"alpha={genotype.residual_scale!r}",
        )
        d_c = max(1, s_c // 2)
        block_widths = [d_c] * cfg.convs_per_block
        for conv_idx, c_out in enumerate(block_widths):
            builder.conv(kernel, c_out, stage=stage)
            builder.activation(act, stage=stage)

    # --- output ---
    out_stage = 2 * n_s + 1
    h, w, c = builder.shape
    builder.add(
        "output_conv",
        (h, w, cfg.num_classes),
        kernel=1,
        params=_conv_params(1, c, cfg.num_classes),
        flops=_conv_flops(1, c, cfg.num_classes, h, w),
        stage=out_stage,
        note="1x1 classifier",
    )
    builder.activation("softmax", stage=out_stage, note="softmax")

    if builder.shape[:2] != (height, width):
        raise PlannerError(
            f"decoder failed to restore spatial extent: got {builder.shape[:2]}"
        )

    layers = tuple(builder.layers)
    return ArchitecturePlan(
        input_shape=cfg.input_shape,
        layers=layers,
        total_params=sum(layer.param_count for layer in layers),
        total_flops=sum(layer.flop_count for layer in layers),
    )


def count_params(plan: ArchitecturePlan) -> int:
    """Exact parameter total (recomputed from the layer list)."""
    total = sum(layer.param_count for layer in plan.layers)
    if total != plan.total_params:
        raise PlannerError("plan total_params inconsistent with its layers")
    return total


def count_flops(plan: ArchitecturePlan) -> int:
    """Exact FLOP total under the 2-FLOPs-per-MAC convention."""
    total = sum(layer.flop_count for layer in plan.layers)
    if total != plan.total_flops:
        raise PlannerError("plan total_flops inconsistent with its layers")
    return total


def check_constraints(plan: ArchitecturePlan, budget: ResourceBudget) -> Feasibility:
    """Inclusive budget check; reports by how much each budget is exceeded."""
    excess_params = 0
    excess_flops = 0
    if budget.max_params is not None and plan.total_params > budget.max_params:
        excess_params = plan.total_params - budget.max_params
    if budget.max_flops is not None and plan.total_flops > budget.max_flops:
        excess_flops = plan.total_flops - budget.max_flops
    return Feasibility(
        feasible=not (excess_params or excess_flops),
        excess_params=excess_params,
        excess_flops=excess_flops,
    )


def plan_report(plan: ArchitecturePlan) -> str:
    """Audit report: one line per layer plus totals (1 MAC = 2 FLOPs)."""
    lines = [
        f"{'#':>3} {'kind':<14} {'stage':>5} {'input':>12} {'output':>12} "
        f"{'k':>2} {'dil':>3} {'params':>12} {'flops':>16}  note"
    ]
    for idx, layer in enumerate(plan.layers):
        in_s = "x".join(str(d) for d in layer.input_shape)
        out_s = "x".join(str(d) for d in layer.output_shape)
        k = "-" if layer.kernel is None else str(layer.kernel)
        d = "-" if layer.dilation is None else str(layer.dilation)
        lines.append(
            f"{idx:>3} {layer.kind:<14} {layer.stage_index:>5} {in_s:>12} "
            f"{out_s:>12} {k:>2} {d:>3} {layer.param_count:>12,} "
            f"{layer.flop_count:>16,}  {layer.note}"
        )
    lines.append(
        f"totals: params={plan.total_params:,} "
        f"flops={plan.total_flops:,} (1 MAC = 2 FLOPs)"
    )
    return "\n".join(lines)
