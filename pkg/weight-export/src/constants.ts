/**
 * Architecture and preprocessing constants.
 *
 * These must stay identical to the Python package's backbone module
 * (src/deepwsd/backbone.py); the fixture verification gate fails at
 * 1e-4 relative error per stage if they ever diverge.
 */

export const CHANNEL_MEANS = [0.485, 0.456, 0.406] as const;
export const CHANNEL_STDS = [0.229, 0.224, 0.225] as const;

export interface ConvSpec {
  name: string;
  inChannels: number;
  outChannels: number;
}

/** 13 convolutions in 5 blocks; 2x2 max pooling sits between blocks. */
export const VGG16_BLOCKS: ConvSpec[][] = [
  [
    { name: 'conv1_1', inChannels: 3, outChannels: 64 },
    { name: 'conv1_2', inChannels: 64, outChannels: 64 },
  ],
  [
    { name: 'conv2_1', inChannels: 64, outChannels: 128 },
    { name: 'conv2_2', inChannels: 128, outChannels: 128 },
  ],
  [
    { name: 'conv3_1', inChannels: 128, outChannels: 256 },
    { name: 'conv3_2', inChannels: 256, outChannels: 256 },
    { name: 'conv3_3', inChannels: 256, outChannels: 256 },
  ],
  [
    { name: 'conv4_1', inChannels: 256, outChannels: 512 },
    { name: 'conv4_2', inChannels: 512, outChannels: 512 },
    { name: 'conv4_3', inChannels: 512, outChannels: 512 },
  ],
  [
    { name: 'conv5_1', inChannels: 512, outChannels: 512 },
    { name: 'conv5_2', inChannels: 512, outChannels: 512 },
    { name: 'conv5_3', inChannels: 512, outChannels: 512 },
  ],
];

/** The 26 canonical tensor names and shapes of a valid archive. */
export function canonicalShapes(): Map<string, number[]> {
  const shapes = new Map<string, number[]>();
  for (const block of VGG16_BLOCKS) {
    for (const conv of block) {
      shapes.set(`${conv.name}.weight`, [conv.outChannels, conv.inChannels, 3, 3]);
      shapes.set(`${conv.name}.bias`, [conv.outChannels]);
    }
  }
  return shapes;
}
