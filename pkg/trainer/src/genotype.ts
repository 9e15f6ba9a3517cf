/** Architecture genotype: wire form, bounds, and validation.
 *
 * The bounds mirror the search engine's space exactly; the worker rejects
 * anything outside them with a protocol error rather than building a model.
 */

import { z } from "zod";

export const ATTENTION_CHOICES = ["squeeze_excitation", "self_attention"] as const;
export const FUSION_CHOICES = ["add", "concat", "weighted_sum"] as const;
export const ACTIVATION_CHOICES = ["relu", "elu", "tanh", "sigmoid"] as const;

export type Attention = (typeof ATTENTION_CHOICES)[number];
export type Fusion = (typeof FUSION_CHOICES)[number];
export type Activation = (typeof ACTIVATION_CHOICES)[number];

export const genotypeSchema = z
  .object({
    filter_base: z.number().int().min(32).max(127),
    kernel_size: z.number().int().min(1).max(7),
    num_stages: z.number().int().min(2).max(4),
    dropout_rate: z.number().min(0.1).max(0.5),
    attention: z.enum(ATTENTION_CHOICES),
    fusion: z.enum(FUSION_CHOICES),
    activation: z.enum(ACTIVATION_CHOICES),
    residual_scale: z.number().min(0.1).max(1.0),
  })
  .strict();

export type Genotype = z.infer<typeof genotypeSchema>;

/** Parse an untyped wire value; throws with a readable message when invalid. */
export function parseGenotype(raw: unknown): Genotype {
  const result = genotypeSchema.safeParse(raw);
  if (!result.success) {
    const detail = result.error.issues
      .map((issue) => `${issue.path.join(".") || "genotype"}: ${issue.message}`)
      .join("; ");
    throw new Error(`invalid genotype: ${detail}`);
  }
  return result.data;
}

/** Canonical short form used in log lines. */
export function describeGenotype(g: Genotype): string {
  return (
    `f=${g.filter_base} k=${g.kernel_size} s=${g.num_stages} ` +
    `d=${g.dropout_rate} ${g.attention}/${g.fusion}/${g.activation} ` +
    `alpha=${g.residual_scale}`
  );
}
