/** Stride-1 same-padding conv2d with hand-composed gradients.
 *
 * The wasm backend ships a fast forward Conv2D kernel (and most other
 * gradient kernels) but does not register Conv2DBackpropFilter, and its
 * Conv2DBackpropInput ignores dilation. Both gradients of a stride-1
 * convolution are themselves convolutions, so this module expresses them
 * with the forward kernel:
 *
 *  - dx: convolve dy (padded with the *mirrored* asymmetric padding) with
 *    the spatially flipped kernel, in/out channels swapped, same dilation;
 *  - dW: swap batch and channel axes — convolve x-as-[cin, H, W, batch]
 *    with dy-as-[OH, OW, batch, cout] at stride = dilation, valid padding,
 *    giving [cin, kh, kw, cout].
 *
 * This keeps training runnable (and fast) on any backend that implements
 * plain Conv2D.
 */

import * as tf from "@tensorflow/tfjs";

function samePadding(kernel: number, dilation: number): [number, number] {
  const total = dilation * (kernel - 1);
  const before = Math.floor(total / 2);
  return [before, total - before];
}

/** kernel: [kh, kw, cin, cout]; x: [b, h, w, cin]; output: [b, h, w, cout]. */
export function conv2dSame(
  x: tf.Tensor4D,
  kernel: tf.Tensor4D,
  dilation = 1
): tf.Tensor4D {
  const op = tf.customGrad((xi, ki, save) => {
    const xT = xi as tf.Tensor4D;
    const kT = ki as tf.Tensor4D;
    (save as tf.GradSaveFunc)([xT, kT]);
    const value = tf.conv2d(xT, kT, 1, "same", "NHWC", dilation);
    const gradFunc = (dy: tf.Tensor4D, saved: tf.Tensor[]) => {
      const [xs, ks] = saved as [tf.Tensor4D, tf.Tensor4D];
      const [kh, kw] = ks.shape;
      const [padTopH, padBottomH] = samePadding(kh, dilation);
      const [padTopW, padBottomW] = samePadding(kw, dilation);

      // dx = conv(dy padded with mirrored pads, flip(kernel) with channels
      // swapped, dilation unchanged, valid padding).
      const flipped = tf.transpose(
        tf.reverse(ks, [0, 1]),
        [0, 1, 3, 2]
      ) as tf.Tensor4D;
      const dyPadded = tf.pad(dy, [
        [0, 0],
        [padBottomH, padTopH],
        [padBottomW, padTopW],
        [0, 0],
      ]) as tf.Tensor4D;
      const dx = tf.conv2d(dyPadded, flipped, 1, "valid", "NHWC", dilation);

      // dW via batch<->channel swap; x gets the forward pads explicitly.
      const xPadded = tf.pad(xs, [
        [0, 0],
        [padTopH, padBottomH],
        [padTopW, padBottomW],
        [0, 0],
      ]);
      const xSwapped = tf.transpose(xPadded, [3, 1, 2, 0]) as tf.Tensor4D;
      const dySwapped = tf.transpose(dy, [1, 2, 0, 3]) as tf.Tensor4D;
      const dwSwapped = tf.conv2d(
        xSwapped,
        dySwapped,
        dilation,
        "valid",
        "NHWC",
        1
      );
      const dw = tf.transpose(dwSwapped, [1, 2, 0, 3]);
      return [dx, dw];
    };
    return { value, gradFunc };
  });
  return op(x, kernel) as tf.Tensor4D;
}
